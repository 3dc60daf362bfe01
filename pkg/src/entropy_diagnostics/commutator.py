"""
Nonlinear mollification commutators and their scaling.

For a Hölder field v of exponent alpha and a C^2 map F, the commutator
``(F(v))^eps - F(v^eps)`` is bounded by ``1/2 max|F''| [v]_alpha^2 (2 eps)^(2 alpha)``;
it vanishes identically for affine F.  :func:`scaling_scan` measures the
exponent by a log-log fit over a sweep of radii, and :func:`proof_terms`
evaluates the two terms of the local entropy balance (the flux term J and the
commutator term K) on a space-time field.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import ConstraintError
from .grid_fields import Field, estimate_holder, sup_norm
from .mollifier import make_kernel, mollify, MollifierKernel
from .systems import ConservationSystem, EntropyPair, StateDomain, VectorMap

AFFINE_TOLERANCE = 1e-11
FIT_MIN_CELLS = 8.0
MIN_SAMPLES = 5
MIN_DECADES = 2.0
SLOPE_BAND = 0.25
MIN_R2 = 0.98
SMOOTH_SLOPE = 1.9

CONSISTENT_2ALPHA = "CONSISTENT_2ALPHA"
SATURATED_SMOOTH = "SATURATED_SMOOTH"
EXACT_AFFINE = "EXACT_AFFINE"
INCONCLUSIVE = "INCONCLUSIVE"


# -- nonlinearity catalogue ----------------------------------------------------

def _scalar_map(f, df, d2f, domain=None):
    return VectorMap(lambda u: f(u),
                     lambda u: df(u)[..., None],
                     lambda u: d2f(u)[..., None, None], m=1, domain=domain)


NONLINEARITIES = {
    "square": lambda: _scalar_map(lambda u: u * u, lambda u: 2.0 * u,
                                  lambda u: np.full_like(u, 2.0)),
    "cube": lambda: _scalar_map(lambda u: u ** 3, lambda u: 3.0 * u * u, lambda u: 6.0 * u),
    "exp-clamped": lambda: _scalar_map(np.exp, np.exp, np.exp,
                                       StateDomain((-20.0,), (20.0,))),
}


def nonlinearity(name: str) -> VectorMap:
    try:
        return NONLINEARITIES[name]()
    except KeyError:
        raise ConstraintError(f"unknown nonlinearity {name!r}; choose from "
                              f"{', '.join(NONLINEARITIES)}") from None


def affine(slope, offset) -> VectorMap:
    """``F(u) = slope @ u + offset``; scalars give a scalar map."""
    A = np.atleast_2d(np.asarray(slope, dtype=float))
    b = np.atleast_1d(np.asarray(offset, dtype=float))
    m, c = A.shape
    return VectorMap(lambda u: u @ A.T + b,
                     lambda u: np.broadcast_to(A, u.shape[:-1] + (m, c)).copy(),
                     lambda u: np.zeros(u.shape[:-1] + (m, c, c)), m=m)


# -- commutator field ----------------------------------------------------------

def _checked_image(v: Field, F: VectorMap) -> Field:
    if F.domain is not None:
        F.domain.require(v.data, "field value")
    return Field(v.grid, F.value(v.data))


def _commutator_data(v: Field, Fv: Field, F: VectorMap, k: MollifierKernel) -> np.ndarray:
    v_eps = mollify(v, k)
    if F.domain is not None:
        F.domain.require(v_eps.data, "mollified field value")
    return mollify(Fv, k).data - F.value(v_eps.data)


def commutator_field(v: Field, F: VectorMap, k: MollifierKernel) -> Field:
    """``(F(v))^eps - F(v^eps)`` on the grid, componentwise for vector F."""
    return Field(v.grid, _commutator_data(v, _checked_image(v, F), F, k))


def interior_mask(grid, epsilon: float, margin: float = 0.0) -> np.ndarray:
    """Points at least ``margin + 2 eps`` away from a bounded grid's edge."""
    if grid.periodic_topology:
        return np.ones(grid.shape, dtype=bool)
    return grid.boundary_distance() >= margin + 2.0 * epsilon


def second_derivative_bound(F: VectorMap, v: Field, samples: int = 257) -> float:
    """Largest |F''| over the range of values taken by ``v``."""
    if F.hessian is None:
        raise ConstraintError("the nonlinearity has no Hessian evaluator")
    if v.components == 1:
        pts = np.linspace(v.data.min(), v.data.max(), samples)[:, None]
    else:
        flat = v.data.reshape(-1, v.components)
        pts = flat[:: max(1, len(flat) // 4096)]
    return float(np.max(np.abs(F.hessian(pts))))


def commutator_bound(v: Field, F: VectorMap, k: MollifierKernel, alpha: float,
                     seminorm: float | None = None) -> float:
    """``1/2 max|F''| [v]_alpha^2 (2 eps)^(2 alpha)``, with the seminorm estimated if absent."""
    if seminorm is None:
        seminorm = estimate_holder(v, alpha).seminorm
    return 0.5 * second_derivative_bound(F, v) * seminorm ** 2 * (2.0 * k.epsilon) ** (2 * alpha)


# -- scaling -------------------------------------------------------------------

def fit_loglog(x, y) -> tuple[float, float, float]:
    """Least-squares line through (log x, log y): slope, intercept, r^2."""
    lx, ly = np.log(np.asarray(x, dtype=float)), np.log(np.asarray(y, dtype=float))
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), max(0.0, min(1.0, r2))


@dataclass(frozen=True)
class ScalingReport:
    samples: list
    fitted_slope: float
    fitted_intercept: float
    r_squared: float
    alpha_input: float | None
    verdict: str
    excluded: list = dc_field(default_factory=list)

    @property
    def epsilons(self) -> np.ndarray:
        return np.array([e for e, _ in self.samples])

    @property
    def norms(self) -> np.ndarray:
        return np.array([n for _, n in self.samples])

    def running_slopes(self) -> list:
        out = [float("nan")]
        for i in range(2, len(self.samples) + 1):
            e, n = self.epsilons[:i], self.norms[:i]
            out.append(fit_loglog(e, n)[0] if np.all(n > 0) else float("nan"))
        return out


def classify(slope, r2, alpha) -> str:
    if alpha is not None and abs(slope - 2.0 * alpha) <= SLOPE_BAND and r2 >= MIN_R2:
        return CONSISTENT_2ALPHA
    if slope >= SMOOTH_SLOPE:
        return SATURATED_SMOOTH
    return INCONCLUSIVE


def _filter_radii(grid, eps_list):
    eps = [float(e) for e in eps_list]
    if any(b <= a for a, b in zip(eps, eps[1:])):
        raise ConstraintError("eps_list must be sorted ascending without repeats")
    h = max(grid.h)
    valid, excluded = [], []
    for e in eps:
        if e < FIT_MIN_CELLS * h or e < 2.0 * h or e >= min(grid.length) / 4.0:
            excluded.append(e)
        else:
            valid.append(e)
    if len(valid) < MIN_SAMPLES:
        raise ConstraintError(f"only {len(valid)} radii survive grid-resolution filtering "
                              f"(need {MIN_SAMPLES})")
    if np.log10(valid[-1] / valid[0]) < MIN_DECADES - 1e-9:
        raise ConstraintError(f"usable radii span {np.log10(valid[-1] / valid[0]):.2f} "
                              f"decades (need {MIN_DECADES})")
    return valid, excluded


def scaling_scan(v: Field, F: VectorMap, eps_list, alpha: float | None = None,
                 workers: int = 1, margin: float = 0.0) -> ScalingReport:
    """Sup norm of the commutator per radius and its log-log slope.

    Radii below 8h or at/above a quarter of the domain are dropped before
    fitting.  Sup norms are taken over the deep interior (see
    :func:`interior_mask`).  All-vanishing norms give the ``EXACT_AFFINE``
    verdict without a fit.
    """
    valid, excluded = _filter_radii(v.grid, eps_list)
    Fv = _checked_image(v, F)

    def one(eps):
        k = make_kernel(v.grid, eps)
        comm = _commutator_data(v, Fv, F, k)
        mask = interior_mask(v.grid, eps, margin)
        return float(np.max(np.abs(comm[mask])))

    with ThreadPoolExecutor(max_workers=max(1, int(workers))) as pool:
        norms = list(pool.map(one, valid))

    samples = list(zip(valid, norms))
    scale = max(sup_norm(Fv), sup_norm(v), np.finfo(float).tiny)
    if max(norms) <= AFFINE_TOLERANCE * scale:
        nan = float("nan")
        return ScalingReport(samples, nan, nan, nan, alpha, EXACT_AFFINE, excluded)
    if min(norms) <= 0.0:
        nan = float("nan")
        return ScalingReport(samples, nan, nan, nan, alpha, INCONCLUSIVE, excluded)
    slope, intercept, r2 = fit_loglog(valid, norms)
    return ScalingReport(samples, slope, intercept, r2, alpha, classify(slope, r2, alpha), excluded)


# -- proof terms ---------------------------------------------------------------

@dataclass(frozen=True)
class ProofTermReport:
    epsilon: float
    J_value: float        # -sum_i int d_i(phi B(u^eps)) . A_i(u^eps)
    J_integrated: float   # -sum_i int d_i phi q_i(u^eps)
    K_value: float        # sum_i int d_i(phi B(u^eps)) . (A_i(u^eps) - A_i(u)^eps)
    K_abs: float          # same integrand in absolute value
    weak_form_direct: float  # -sum_i int d_i phi q_i(u) on the unmollified field

    @property
    def consistency(self) -> float:
        """Relative gap between the two evaluations of J."""
        return abs(self.J_value - self.J_integrated) / max(abs(self.J_integrated), 1e-300)


def centered_difference(f: np.ndarray, axis: int, h: float) -> np.ndarray:
    """Fourth-order centred difference with periodic wrap."""
    return (8.0 * (np.roll(f, -1, axis) - np.roll(f, 1, axis))
            - (np.roll(f, -2, axis) - np.roll(f, 2, axis))) / (12.0 * h)


class _ProofTerms:
    def __init__(self, u: Field, sys: ConservationSystem, ep: EntropyPair, phi):
        grid = u.grid
        if grid.dim != sys.d + 1:
            raise ConstraintError(f"{sys.name} needs a {sys.d + 1}-dimensional space-time grid")
        if u.components != sys.k:
            raise ConstraintError(f"field has {u.components} components, system has k={sys.k}")
        if phi.dim != grid.dim:
            raise ConstraintError("test function dimension differs from the grid")
        sys.domain.require(u.data, "field value")
        self.u, self.sys, self.ep, self.phi = u, sys, ep, phi
        self.flux_fields = [Field(grid, A.value(u.data)) for A in sys.fluxes]
        coords = [grid.coords(a) for a in range(grid.dim)]
        self.phi_values, self.phi_grads = phi.evaluate(coords)
        w = grid.quadrature_weights(0)
        for a in range(1, grid.dim):
            w = np.multiply.outer(w, grid.quadrature_weights(a))
        self.weights = w
        self.direct = -sum(float(np.sum(w * g * ep.q(i, u.data)))
                           for i, g in enumerate(self.phi_grads))

    def check_support(self, eps):
        grid = self.u.grid
        for a, (lo, hi) in enumerate(self.phi.support):
            margin = 2.0 * eps if not grid.periodic_topology else 0.0
            if lo < grid.lower[a] + margin or hi > grid.upper[a] - margin:
                raise ConstraintError(f"test-function support {(lo, hi)} on axis {a} is closer "
                                      f"than 2*eps={2 * eps:g} to the grid edge")

    def __call__(self, eps) -> ProofTermReport:
        self.check_support(eps)
        grid, sys, ep = self.u.grid, self.sys, self.ep
        k = make_kernel(grid, eps)
        u_eps = mollify(self.u, k).data
        sys.domain.require(u_eps, "mollified field value")
        psi = self.phi_values[..., None] * ep.multiplier.value(u_eps)
        J = Jq = K = K_abs = 0.0
        for i, A in enumerate(sys.fluxes):
            dpsi = centered_difference(psi, i, grid.h[i])
            A_eps = A.value(u_eps)
            comm = A_eps - mollify(self.flux_fields[i], k).data
            J -= float(np.sum(self.weights * np.sum(dpsi * A_eps, axis=-1)))
            Jq -= float(np.sum(self.weights * self.phi_grads[i] * ep.q(i, u_eps)))
            integrand = np.sum(dpsi * comm, axis=-1)
            K += float(np.sum(self.weights * integrand))
            K_abs += float(np.sum(self.weights * np.abs(integrand)))
        return ProofTermReport(float(eps), J, Jq, K, K_abs, self.direct)


def proof_terms(u: Field, sys: ConservationSystem, ep: EntropyPair, phi,
                k: MollifierKernel) -> ProofTermReport:
    """J and K terms of the local entropy balance at radius ``k.epsilon``.

    ``u`` lives on a (d+1)-dimensional grid whose axis 0 is time.  Derivatives of
    ``phi B(u^eps)`` use fourth-order centred differences; integrals use the
    trapezoid rule.
    """
    return _ProofTerms(u, sys, ep, phi)(k.epsilon)


def proof_term_scan(u: Field, sys: ConservationSystem, ep: EntropyPair, phi, eps_list,
                    workers: int = 1):
    """Proof terms over a sweep of radii plus the log-log fit of |K|."""
    valid, excluded = _filter_radii(u.grid, eps_list)
    evaluator = _ProofTerms(u, sys, ep, phi)
    with ThreadPoolExecutor(max_workers=max(1, int(workers))) as pool:
        reports = list(pool.map(evaluator, valid))
    K = np.abs([r.K_value for r in reports])
    samples = list(zip(valid, K.tolist()))
    if np.any(K <= 0):
        nan = float("nan")
        return reports, ScalingReport(samples, nan, nan, nan, None, INCONCLUSIVE, excluded)
    slope, intercept, r2 = fit_loglog(valid, K)
    return reports, ScalingReport(samples, slope, intercept, r2, None, INCONCLUSIVE, excluded)
