# Checking entropy / entropy-flux pairs
#
# A pair (eta, q) is compatible with a conservation law when the gradient of
# every entropy flux equals B(u) times the flux Jacobian, and B(u) DA_i
# symmetrizes the system.  Here we check the built-in systems, a pair that is
# deliberately wrong, and a system typed in as expressions.

from entropy_diagnostics import (BUILTIN_NAMES, asymmetric_pair, builtin, check_compatibility,
                                 check_symmetry, load_system)

for name in BUILTIN_NAMES:
    sys_, ep = builtin(name)
    c = check_compatibility(sys_, ep, samples=1000, seed=0)
    s = check_symmetry(sys_, ep, samples=1000, seed=0)
    print(f"{name:30s} compat={c.max_residual_compat:.1e}  symmetry={s.max_residual_symmetry:.1e}")

sys_, ep = asymmetric_pair()
s = check_symmetry(sys_, ep)
print(f"{'broken pair':30s} symmetry={s.max_residual_symmetry:.3g} at {s.worst_point}")

# User systems are JSON documents with flux and entropy expressions in u1..uk.
# Derivatives come from forward differentiation of the expression tree.

doc = {
    "name": "cubic", "k": 1, "d": 1, "l": 1, "domain": [[-3, 3]],
    "fluxes": [["u1"], ["u1^3/3"]],
    "entropy_multiplier": ["u1"],
    "entropy_fluxes": ["u1^2/2", "u1^4/4"],
}
sys_, ep = load_system(doc)
print("cubic flux:", check_compatibility(sys_, ep).max_residual_compat)
