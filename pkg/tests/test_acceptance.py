"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line
with its measured numbers and asserting the stated tolerance and runtime
budget.

Criterion 10's two time-direction slope targets (1.5 and 0.5) are implemented
exactly as stated and are expected to fail honestly: for constant initial
data every chaos order's time-increment second moment is exactly quadratic in
the lag (the time dependence sits only in the simplex upper limit), so the
fitted slopes measure ~2.0 with R^2 ~ 1.  The 3/2 law lives one layer down,
in the local-time temporal increments, where this suite measures it at slope
1.50; see the criterion-10 tests and `demos/06_regularity_slopes.py`.
"""

import math
import time
from contextlib import contextmanager

import numpy as np
import pytest

from wickshe.basis import (MultiIndex, TruncationSpec, enumerate_multiindices,
                           hermite_function, hermite_function_dx,
                           hermite_function_table, hermite_poly)
from wickshe.chaos import (ChaosCoefficients, s_transform_chaos,
                           s_transform_tail_estimate, wick_product)
from wickshe.coefficients import CoefficientQuadrature, cs_level_coefficients
from wickshe.feynman_kac import (local_time_ensemble_stats, psi_law_stats,
                                 s_transform_dx_mc, s_transform_mc)
from wickshe.kernels import (apply_heat_semigroup, build_line_grid, constant_ic,
                             dxp_cross_inner, heat_kernel, heat_kernel_dx, sine_ic)
from wickshe.propagator import PropagatorGrid, propagator_oracle
from wickshe.regularity import (exact_increment_curve, fit_exponent,
                                local_time_increment_check,
                                local_time_temporal_increment_check)
from wickshe.spectral import SpectralChaosField
from wickshe.streams import substream

SEED = 20260808
N_PATHS = 100_000
DT = 1e-3
DELTA_A = 0.025


@contextmanager
def budget(name: str, seconds: float):
    t0 = time.perf_counter()
    holder = {}
    yield holder
    elapsed = time.perf_counter() - t0
    holder["elapsed"] = elapsed
    status = "PASS" if holder.get("ok", True) else "FAIL"
    print(f"\n[criterion {name}] {status} ({elapsed:.1f} s): {holder.get('detail', '')}")
    assert elapsed < seconds, f"criterion {name} exceeded its {seconds:.0f} s budget"


# -- shared heavy artifacts --------------------------------------------------


@pytest.fixture(scope="module")
def spectral_n4j6():
    fields = {}
    for tag, ic in (("constant", constant_ic()), ("sine", sine_ic())):
        fields[tag] = SpectralChaosField(TruncationSpec(4, 6), ic).run([0.5, 1.0])
    return fields


@pytest.fixture(scope="module")
def lt_stats():
    return local_time_ensemble_stats(1.0, DT, DELTA_A, N_PATHS, SEED, threads=2)


# -- criteria ----------------------------------------------------------------


def test_criterion_01_basis_health():
    with budget("1: basis health", 1.0) as rep:
        grid = build_line_grid(12.0, panels=30, nodes_per_panel=16)  # 480 nodes
        E = hermite_function_table(8, grid.nodes)
        gram_defect = float(np.abs((E * grid.weights) @ E.T - np.eye(8)).max())

        eps = 3e-6
        appell = 0.0
        for n in range(1, 11):
            for x in np.linspace(-3.0, 3.0, 13):
                fd = (hermite_poly(n, x + eps) - hermite_poly(n, x - eps)) / (2 * eps)
                ref = n * hermite_poly(n - 1, x)
                appell = max(appell, abs(fd - ref) / max(1.0, abs(ref)))
        rep["ok"] = gram_defect <= 1e-8 and appell <= 1e-8
        rep["detail"] = f"orthonormality defect {gram_defect:.2e}, Appell defect {appell:.2e}"
        assert gram_defect <= 1e-8
        assert appell <= 1e-8


def test_criterion_02_kernel_identities():
    with budget("2: kernel identities", 5.0) as rep:
        grid = build_line_grid(14.0, panels=56)
        semi = 0.0
        for s in (0.1, 0.5, 1.0):
            for t in (0.1, 0.5, 1.0):
                for d in (-3.0, -1.0, 0.0, 2.0, 3.0):
                    conv = float(np.dot(heat_kernel(s, d - grid.nodes) * grid.weights,
                                        heat_kernel(t, grid.nodes)))
                    semi = max(semi, abs(conv - heat_kernel(s + t, d)))
        mass = max(abs(float(np.dot(heat_kernel(t, grid.nodes), grid.weights)) - 1.0)
                   for t in (0.1, 0.7, 1.5))
        from scipy.integrate import quad
        cross = 0.0
        for (t1, t2, x1, x2) in [(1.0, 2.0, 0.0, 0.7), (0.4, 0.9, -1.0, 0.3)]:
            num = quad(lambda z: heat_kernel_dx(t1, x1 - z) * heat_kernel_dx(t2, x2 - z),
                       -30, 30, limit=400)[0]
            cross = max(cross, abs(num - dxp_cross_inner(t1, t2, x1, x2)))
        sine_defect = 0.0
        for t in (0.25, 1.0):
            for x in (0.0, math.pi / 2, -1.2):
                val = apply_heat_semigroup(sine_ic(), t, x, grid)
                sine_defect = max(sine_defect, abs(val - math.exp(-t / 2) * math.sin(x)))
        rep["ok"] = semi <= 1e-6 and mass <= 1e-8 and cross <= 1e-6 and sine_defect <= 1e-6
        rep["detail"] = (f"semigroup {semi:.2e}, mass {mass:.2e}, cross-inner {cross:.2e}, "
                         f"sine eigenrelation {sine_defect:.2e}")
        assert semi <= 1e-6 and mass <= 1e-8
        assert cross <= 1e-6 and sine_defect <= 1e-6


def test_criterion_03_representation_equivalence():
    from wickshe.wiener_kernels import fk_kernel, mw_kernel, sym_cs_kernel
    with budget("3: representation equivalence", 120.0) as rep:
        quad = CoefficientQuadrature()
        worst_mw, worst_cs = 0.0, 0.0
        y_grid = np.linspace(-1.0, 1.0, 5)
        for ic in (constant_ic(), sine_ic()):
            for n in (1, 2):
                fk = fk_kernel(n, 1.0, 0.0, ic, quad)
                mw = mw_kernel(n, 1.0, 0.0, ic, quad)
                sym = sym_cs_kernel(n, 1.0, 0.0, ic, quad)
                probes = ([(float(a),) for a in y_grid] if n == 1 else
                          [(float(a), float(b)) for a in y_grid for b in y_grid])
                for ys in probes:
                    v = fk(*ys)
                    worst_mw = max(worst_mw, abs(v - mw(*ys)))
                    worst_cs = max(worst_cs, abs(v - sym(*ys)))
        rep["ok"] = worst_mw == 0.0 and worst_cs <= 1e-3
        rep["detail"] = f"max |fk-mw| = {worst_mw:.1e} (exact), max |fk-sym_cs| = {worst_cs:.2e}"
        assert worst_mw == 0.0, "fk and mw kernels must agree exactly post-substitution"
        assert worst_cs <= 1e-3


def test_criterion_04_chaos_vs_propagator():
    with budget("4: chaos vs propagator", 120.0) as rep:
        probe_points = [(0.5, 0.0), (0.5, 0.3), (1.0, 0.0), (1.0, -0.5)]
        spec = TruncationSpec(2, 6)
        quad = CoefficientQuadrature()
        grid = PropagatorGrid(dt=0.00125, dx=0.0125)
        worst = 0.0
        for ic in (constant_ic(), sine_ic()):
            sol = propagator_oracle(spec, ic, grid, snapshot_times=[0.5, 1.0])
            for (t, x) in probe_points:
                cn = sol.coefficients_at(t, x)
                for n in (1, 2):
                    qvals = cs_level_coefficients(n, t, x, ic, spec, quad)
                    for a, v in qvals.items():
                        # relative tolerance; coefficients below 0.01 are
                        # measured against the 1e-5 absolute floor instead
                        dev = abs(v - cn.get(a)) / max(abs(v), 1e-2)
                        worst = max(worst, dev)
        rep["ok"] = worst <= 1e-3
        rep["detail"] = f"max relative deviation |alpha| <= 2: {worst:.2e} (tol 1e-3)"
        assert worst <= 1e-3


def _phi_sets():
    c, w = 0.3, 0.8

    def bump(y):
        return 0.6 * np.exp(-(y - c) ** 2 / (2 * w * w))

    def bump_dx(y):
        return -0.6 * (y - c) / (w * w) * np.exp(-(y - c) ** 2 / (2 * w * w))

    return [
        ("zero", lambda y: np.zeros_like(y), lambda y: np.zeros_like(y), 0.0),
        ("half_e1", lambda y: 0.5 * hermite_function(1, y),
         lambda y: 0.5 * hermite_function_dx(1, y), 0.5 * math.pi ** -0.25),
        ("gaussian_bump", bump, bump_dx, 0.6),
    ]


def test_criterion_05_stransform_cross_checks(spectral_n4j6):
    with budget("5: S-transform cross-checks", 300.0) as rep:
        fld = spectral_n4j6["constant"]
        ic = constant_ic()
        grid = build_line_grid(14.0, panels=56)
        E = hermite_function_table(6, grid.nodes)
        worst_z = 0.0
        lines = []
        for (t, x) in ((1.0, 0.0), (0.5, 0.3)):
            c_u = fld.coefficients_at(t, x)
            c_k = fld.coefficients_at(t, x, deriv=True)
            for name, phi, phi_dx, sup in _phi_sets():
                vals = np.asarray(phi(grid.nodes), dtype=float)
                modes = (E * grid.weights) @ vals
                mode_tail = max(float(np.dot(vals * vals, grid.weights) - modes @ modes), 0.0)
                for fname, table, mc_fn in (
                        ("u", c_u, lambda: s_transform_mc(
                            t, x, ic, phi, N_PATHS, SEED, dt=DT, phi_sup=sup,
                            stream_label=f"acc5-{name}-{t}", threads=2)),
                        ("dx_u", c_k, lambda: s_transform_dx_mc(
                            t, x, ic, phi, phi_dx, N_PATHS, SEED, dt=DT, phi_sup=sup,
                            stream_label=f"acc5d-{name}-{t}", threads=2))):
                    chaos_val = s_transform_chaos(table, modes)
                    tail = s_transform_tail_estimate(table, modes) + mode_tail
                    mc_val, se = mc_fn()
                    window = 3.0 * se + tail
                    dev = abs(chaos_val - mc_val)
                    worst_z = max(worst_z, dev / window if window > 0 else 0.0)
                    if dev > window:
                        lines.append(f"{fname}/{name}@t={t}: dev {dev:.2e} > {window:.2e}")
        rep["ok"] = not lines
        rep["detail"] = (f"worst deviation / (3 se + tail) = {worst_z:.2f}"
                         + ("; " + "; ".join(lines) if lines else ""))
        assert not lines, lines


def test_criterion_06_local_time_targets(lt_stats):
    with budget("6: local-time targets", 300.0) as rep:
        stats = lt_stats
        el0 = math.sqrt(2.0 / math.pi)                      # E L_0(1)
        el2 = 8.0 / (3.0 * math.sqrt(2.0 * math.pi))        # E int L^2 da at t = 1
        table = local_time_increment_check(1.0, [0.1], N_PATHS, SEED, dt=DT,
                                           delta_a=DELTA_A, threads=2)
        ratio = table[0][1]
        ok_mass = stats["mass_identity_defect"] < 1e-10
        dev_l = abs(stats["mean_L_at_start"] - el0)
        win_l = 3 * stats["se_L_at_start"] + stats["bias_budget_L"]
        dev_q = abs(stats["mean_int_L2"] - el2)
        win_q = 3 * stats["se_int_L2"] + stats["bias_budget_L2"]
        ok = ok_mass and dev_l <= win_l and dev_q <= win_q and 3.6 <= ratio <= 4.4
        rep["ok"] = ok
        rep["detail"] = (f"mass defect {stats['mass_identity_defect']:.1e}; "
                         f"E L0 {stats['mean_L_at_start']:.5f} vs {el0:.5f} "
                         f"(win {win_l:.4f}); E intL2 {stats['mean_int_L2']:.5f} vs "
                         f"{el2:.5f} (win {win_q:.4f}); ratio {ratio:.3f} in [3.6, 4.4]")
        assert ok_mass and dev_l <= win_l and dev_q <= win_q
        assert 3.6 <= ratio <= 4.4


def test_criterion_07_psi_law():
    with budget("7: exponent law", 180.0) as rep:
        st = psi_law_stats(1.0, DT, 2.0 * math.sqrt(DT), 50_000, 50_000, SEED, threads=2)
        zc = abs(st["conditional_mean"] - st["conditional_mean_target"]) / st["conditional_se"]
        zv = abs(st["conditional_var"] - st["conditional_var_target"]) / st["conditional_var_se"]
        ze = abs(st["exp_mean"] - 1.0) / st["exp_se"]
        rep["ok"] = zc <= 3 and zv <= 3 and ze <= 3
        rep["detail"] = (f"conditional mean z = {zc:.2f}, variance z = {zv:.2f}, "
                         f"E exp(Psi) = {st['exp_mean']:.4f} (z = {ze:.2f})")
        assert zc <= 3.0 and zv <= 3.0 and ze <= 3.0


def test_criterion_08_wick_algebra():
    with budget("8: Wick algebra", 1.0) as rep:
        spec = TruncationSpec(4, 3)
        xi1 = ChaosCoefficients((0, 0), spec, {MultiIndex((1,)): 1.0})
        prod = wick_product(xi1, xi1)
        exact = (prod.values == {MultiIndex((2,)): math.sqrt(2.0)})

        gen = substream(SEED, "acc8")
        idx = enumerate_multiindices(TruncationSpec(2, 3))
        mk = lambda: ChaosCoefficients((0, 0), spec, {a: float(gen.normal()) for a in idx})
        F, G = mk(), mk()
        phi = gen.normal(size=3)
        smult = abs(s_transform_chaos(wick_product(F, G), phi)
                    - s_transform_chaos(F, phi) * s_transform_chaos(G, phi))
        idx1 = enumerate_multiindices(TruncationSpec(1, 3))
        mk1 = lambda: ChaosCoefficients((0, 0), spec, {a: float(gen.normal()) for a in idx1})
        A, B, C = mk1(), mk1(), mk1()
        comm = wick_product(A, B).values == wick_product(B, A).values
        left, right = wick_product(wick_product(A, B), C), wick_product(A, wick_product(B, C))
        assoc = max(abs(left.get(a) - right.get(a))
                    for a in set(left.values) | set(right.values))
        rep["ok"] = exact and smult <= 1e-10 and comm and assoc <= 1e-12
        rep["detail"] = (f"xi1<>xi1 = sqrt2 xi2 exact: {exact}; S-mult defect {smult:.1e}; "
                         f"commutative: {comm}; associativity defect {assoc:.1e}")
        assert exact and comm
        assert smult <= 1e-10
        assert assoc <= 1e-12


def test_criterion_09_order_norm_decay():
    with budget("9: order-norm decay", 120.0) as rep:
        # lambda = 1 weights e^{2n} beat the measured mass ratios up to
        # n ~ 6, so the summability shape only becomes visible at deep
        # truncation; N = 14, J = 5 keeps the run inside the budget
        spec = TruncationSpec(14, 5)
        fld = SpectralChaosField(spec, constant_ic(), modes=256, dt=1.0 / 256.0)
        fld.run([1.0])
        masses = fld.order_masses(1.0, 0.0, deriv=True)
        ratios = masses[2:] / masses[1:-1]
        decreasing = bool(np.all(np.diff(ratios) < 0))
        cauchy = {}
        for lam in (0.0, 1.0):
            terms = np.exp(2 * lam * np.arange(spec.max_order + 1)) * masses
            csum = np.cumsum(terms)
            cauchy[lam] = terms[-1] / csum[-1]
        ok = decreasing and cauchy[0.0] <= 0.01 and cauchy[1.0] <= 0.01
        rep["ok"] = ok
        rep["detail"] = (f"ratios decreasing for n >= 1: {decreasing}; last-term share "
                         f"lam=0: {cauchy[0.0]:.2e}, lam=1: {cauchy[1.0]:.2e} (tol 1e-2)")
        assert decreasing
        assert cauchy[0.0] <= 0.01 and cauchy[1.0] <= 0.01


# -- criterion 10: Hoelder slopes (four sub-targets) -------------------------

LAGS10 = [2.0 ** -k for k in range(3, 9)]


@pytest.fixture(scope="module")
def slope_fits():
    fits = {}
    t0 = time.perf_counter()
    for fname, deriv in (("u", False), ("dx_u", True)):
        for direction in ("space", "time"):
            curve = exact_increment_curve(1.0, direction, LAGS10, deriv,
                                          max_order=4, rng_seed=SEED)
            fits[(fname, direction)] = fit_exponent(curve)
    fits["elapsed"] = time.perf_counter() - t0
    return fits


def test_criterion_10a_dxu_space_slope(slope_fits):
    est = slope_fits[("dx_u", "space")]
    ok = abs(est.slope - 1.0) <= 0.2 and est.r_squared >= 0.98
    print(f"\n[criterion 10a: dx_u/space] {'PASS' if ok else 'FAIL'}: "
          f"slope {est.slope:.3f} (target 1.0 +- 0.2), R2 {est.r_squared:.4f}")
    assert est.r_squared >= 0.98
    assert abs(est.slope - 1.0) <= 0.2


def test_criterion_10b_u_space_slope(slope_fits):
    est = slope_fits[("u", "space")]
    ok = est.slope >= 1.8 and est.r_squared >= 0.98
    print(f"\n[criterion 10b: u/space] {'PASS' if ok else 'FAIL'}: "
          f"slope {est.slope:.3f} (target >= 1.8), R2 {est.r_squared:.4f}")
    assert est.r_squared >= 0.98
    assert est.slope >= 1.8


def test_criterion_10c_u_time_slope(slope_fits):
    est = slope_fits[("u", "time")]
    ok = abs(est.slope - 1.5) <= 0.2 and est.r_squared >= 0.98
    print(f"\n[criterion 10c: u/time] {'PASS' if ok else 'FAIL'}: "
          f"slope {est.slope:.3f} (target 1.5 +- 0.2), R2 {est.r_squared:.4f}")
    assert est.r_squared >= 0.98
    assert abs(est.slope - 1.5) <= 0.2, (
        f"u/time second-moment slope measures {est.slope:.3f}, not 1.5: for constant "
        "initial data the time dependence of every chaos coefficient sits only in the "
        "simplex upper limit, making each order's increment moment exactly O(h^2); the "
        "(t-s)^{3/2} term is an upper bound living in the local-time layer, where this "
        "suite measures slope 1.5 (see test_criterion_10e). Expected red; see the "
        "acceptance notes in README.md.")


def test_criterion_10d_dxu_time_slope(slope_fits):
    est = slope_fits[("dx_u", "time")]
    ok = abs(est.slope - 0.5) <= 0.2 and est.r_squared >= 0.98
    print(f"\n[criterion 10d: dx_u/time] {'PASS' if ok else 'FAIL'}: "
          f"slope {est.slope:.3f} (target 0.5 +- 0.2), R2 {est.r_squared:.4f}")
    assert est.r_squared >= 0.98
    assert abs(est.slope - 0.5) <= 0.2, (
        f"dx_u/time second-moment slope measures {est.slope:.3f}, not 0.5: same "
        "region-difference structure as the u/time target; the h^{1/2} exponent is an "
        "upper-bound envelope, not the field's measured second moment. Expected red; "
        "see the acceptance notes in README.md.")


def test_criterion_10e_budget_and_local_time_layer(slope_fits):
    # runtime budget for the slope family, plus the supplementary check that
    # the 3/2 exponent is measured where it genuinely lives
    with budget("10: slope family (supplementary)", 600.0) as rep:
        curve = local_time_temporal_increment_check(
            1.0, [0.05, 0.1, 0.15, 0.2, 0.3, 0.4], 20_000, SEED, dt=DT,
            delta_a=DELTA_A, threads=2)
        est = fit_exponent(curve)
        ok = abs(est.slope - 1.5) <= 0.2 and slope_fits["elapsed"] < 450.0
        rep["ok"] = ok
        rep["detail"] = (f"exact-curve family took {slope_fits['elapsed']:.0f} s; "
                         f"local-time temporal slope {est.slope:.3f} (3/2 law)")
        assert slope_fits["elapsed"] < 450.0
        assert abs(est.slope - 1.5) <= 0.2


def test_criterion_11_reproducibility(tmp_path):
    # one identical config file; only the runtime --threads flag varies, and
    # every emitted CSV (reports included) must come out byte-identical
    from wickshe.cli import main
    with budget("11: reproducibility", 120.0) as rep:
        out = tmp_path / "out"
        cfg = tmp_path / "run.cfg"
        cfg.write_text("seed = 99\nmc.n_paths = 20000\nmc.n_noise = 20\n"
                       f"probes = 0.5,0.0\noutput_dir = {out}\n")
        watched = ("localtime.csv", "stransform_compare.csv",
                   "report_localtime.csv", "report_stransform-compare.csv")
        digests = {f: set() for f in watched}
        for threads in (1, 2, 8):
            assert main(["localtime", "--config", str(cfg),
                         "--threads", str(threads)]) == 0
            assert main(["stransform-compare", "--config", str(cfg),
                         "--threads", str(threads)]) == 0
            for fname in watched:
                digests[fname].add((out / fname).read_bytes())
        identical = all(len(v) == 1 for v in digests.values())
        rep["ok"] = identical
        rep["detail"] = ("all CSVs byte-identical across 1, 2, 8 worker threads"
                         if identical else f"divergent artifacts: "
                         f"{[k for k, v in digests.items() if len(v) > 1]}")
        assert identical
