"""Operator identities on the Dirichlet grid, in weak form.

Builds the stencil Laplacian, central-difference momentum, dilation generator
and conformal factor, then measures the residuals of the identities that
drive every estimate downstream:

    i[H, A]        vs  2(-lap) - x.grad V
    i[V, A]        vs  -x.grad V
    d/dt <C(t)/t>  vs  -<C(t)>/t^2         (free flow)

and shows the x4 tightening under grid refinement.  A few identities are
exact on the lattice (not just O(h^2)); those are printed separately.
"""

import numpy as np

from proplab import (Potential, commutator_i, dilation, gaussian_state,
                     laplacian, make_grid, momentum, position)
from proplab.suites import (dilation_identity_residual, free_conformal_residual,
                            operator_identity_suite)

print(__doc__)

pot = Potential.gaussian(1.0)

print("weak-form residuals, h halved between rows:")
print(f"{'n':>6} {'h':>9} {'i[H,A] residual':>16} {'free conformal':>15}")
for n in (256, 513, 1027):
    grid = make_grid("line", n, 16.0)
    phi = gaussian_state(grid, width=1.5)
    r_dil = dilation_identity_residual(grid, pot, phi)
    r_conf = free_conformal_residual(grid, phi, t=1.0, dt_offset=0.02 * 256 / n)
    print(f"{n:>6} {grid.h:>9.5f} {r_dil:>16.3e} {r_conf:>15.3e}")

print("\nlattice-exact identities (wall rows aside):")
grid = make_grid("line", 256, 16.0)
lap, x_op, p_op = laplacian(grid), position(grid), momentum(grid)
c_xx = commutator_i(lap, x_op)
print(f"  i[-lap, x] = 2p       max defect {np.abs(c_xx.matrix - 2 * p_op.matrix).max():.2e}")
a_op = dilation(grid)
c_xa = commutator_i(lap, a_op)
interior = np.abs((c_xa.matrix - 2 * (p_op.matrix @ p_op.matrix))[2:-2, 2:-2]).max()
print(f"  i[-lap, A] = 2p^2     interior defect {interior:.2e}")

print("\nfull identity suite at the shipped resolution (n=1024, L=20):")
report = operator_identity_suite(1024, 20.0, Potential.zero(), state_width=2.5, dt_ref=4e-3)
print(report.render())
