"""Chaos coefficients of the solution three ways.

The degree-n coefficient u_alpha(t, x) comes out of (a) simplex quadrature of
the iterated-kernel formula, (b) a Crank-Nicolson sweep of the triangular
coefficient system, and (c) a Fourier exponential-integrator sweep.  All
three agree; (a) and (b) are the dual routes the test suite pins against
each other.
"""

import time

from wickshe import (CoefficientQuadrature, MultiIndex, PropagatorGrid,
                     SpectralChaosField, TruncationSpec, constant_ic,
                     cs_coefficient, propagator_oracle)

t, x = 1.0, 0.0
alpha = MultiIndex((1,))          # first Hermite mode, degree one
ic = constant_ic()

t0 = time.perf_counter()
via_quadrature = cs_coefficient(alpha, t, x, ic, CoefficientQuadrature())
print(f"simplex quadrature : {via_quadrature:.10f}   [{time.perf_counter()-t0:.2f} s]")

t0 = time.perf_counter()
sol = propagator_oracle(TruncationSpec(1, 1), ic, PropagatorGrid(), snapshot_times=[t])
via_cn = sol.coefficients_at(t, x).get(alpha)
print(f"Crank-Nicolson     : {via_cn:.10f}   [{time.perf_counter()-t0:.2f} s]")

t0 = time.perf_counter()
fld = SpectralChaosField(TruncationSpec(1, 1), ic).run([t])
via_spectral = fld.coefficients_at(t, x).get(alpha)
print(f"spectral sweep     : {via_spectral:.10f}   [{time.perf_counter()-t0:.2f} s]")

# the same engine carries thousands of coefficients at once; order masses
# show the super-factorial decay that makes truncation honest
deep = SpectralChaosField(TruncationSpec(8, 6), ic).run([t])
masses = deep.order_masses(t, x)
print("\norder masses of the solution field at (1, 0):")
for n, m in enumerate(masses):
    print(f"  n = {n}: {m:.3e}")
