# The two terms of the local entropy balance
#
# Mollify a space-time field u at radius eps and test the entropy equation
# against phi.  The flux of the mollified field gives a term J that is an exact
# divergence, while the commutator between mollification and the flux gives K.
# For a Hölder field K vanishes like eps**(3 alpha - 1), which is the mechanism
# behind entropy conservation above exponent 1/3.

import numpy as np

from entropy_diagnostics import Grid, builtin, make_weierstrass
from entropy_diagnostics import commutator as cm
from entropy_diagnostics.defect import TestFunction

sys_, ep = builtin("burgers")
# The fit needs two decades of radii between 8h and a quarter of the box,
# hence the 4096^2 grid (about a minute and 3 GB of memory).
grid = Grid.periodic(4096, dim=2)  # axis 0 is time
alpha = 0.45
u = make_weierstrass(grid, alpha, seed=7)
phi = TestFunction((0.5, 0.5), (0.3, 0.3))

radii = np.geomspace(8 * grid.h[0], 800 * grid.h[0], 9)
reports, fit = cm.proof_term_scan(u, sys_, ep, phi, radii)
for r in reports:
    print(f"eps/h={r.epsilon / grid.h[0]:6.1f}  J={r.J_value:+.4e}  "
          f"J(by parts)={r.J_integrated:+.4e}  K={r.K_value:+.3e}  |K|int={r.K_abs:.3e}")
print(f"|K| slope {fit.fitted_slope:.2f}, lower bound 3a-1 = {3 * alpha - 1:.2f}")
