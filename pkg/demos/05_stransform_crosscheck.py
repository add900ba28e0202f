"""S-transform values from both sides of the equivalence.

The chaos side evaluates sum_alpha F_alpha prod_j phi_j^{alpha_j}/sqrt(alpha_j!)
on truncated coefficient tables; the path side averages
u0(B_t) exp(int phi(B_s) ds) over Monte Carlo paths.  The two must agree
within Monte Carlo error plus the reported truncation tail -- for the
solution field and for its spatial derivative.
"""

from wickshe import (SpectralChaosField, TruncationSpec, build_line_grid,
                     constant_ic, hermite_function, hermite_function_dx,
                     s_transform_chaos, s_transform_dx_mc, s_transform_mc)
from wickshe.basis import hermite_function_table
from wickshe.chaos import s_transform_tail_estimate

t, x = 1.0, 0.3
ic = constant_ic()
fld = SpectralChaosField(TruncationSpec(4, 6), ic).run([t])
c_u = fld.coefficients_at(t, x)
c_k = fld.coefficients_at(t, x, deriv=True)

grid = build_line_grid(14.0, panels=56)
E = hermite_function_table(6, grid.nodes)

phi = lambda y: 0.5 * hermite_function(1, y)
phi_dx = lambda y: 0.5 * hermite_function_dx(1, y)
modes = (E * grid.weights) @ phi(grid.nodes)

chaos_u = s_transform_chaos(c_u, modes)
tail_u = s_transform_tail_estimate(c_u, modes)
mc_u, se_u = s_transform_mc(t, x, ic, phi, 100_000, 123, phi_sup=0.5)
print(f"solution field : chaos {chaos_u:.5f}  mc {mc_u:.5f} +- {se_u:.5f}"
      f"  (tail estimate {tail_u:.1e})")

chaos_k = s_transform_chaos(c_k, modes)
tail_k = s_transform_tail_estimate(c_k, modes)
mc_k, se_k = s_transform_dx_mc(t, x, ic, phi, phi_dx, 100_000, 123, phi_sup=0.5)
print(f"derivative field: chaos {chaos_k:.5f}  mc {mc_k:.5f} +- {se_k:.5f}"
      f"  (tail estimate {tail_k:.1e})")
