"""
Weak-form entropy residuals, shock dissipation and boundary entropy budgets.

The pairing of a trajectory with a space-time test function phi is

    E(phi) = sum_i  int int  d_{x_i} phi  q_i(u)  dx dt ,      x_0 = t, q_0 = eta,

evaluated with the trapezoid rule.  Since <d_t eta + d_x q, phi> = -E(phi),
E(phi) > 0 means entropy is dissipated inside the support of phi.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from .errors import ConstraintError, DataError
from .mollifier import bump, bump_derivative, chi_profile
from .systems import EntropyPair
from .solver import Trajectory

SHOCK_FACTOR = 10.0


@dataclass(frozen=True)
class TestFunction:
    """Tensor product of bumps ``prod_a psi((z_a - c_a) / s_a)``, axis 0 being time."""

    __test__ = False  # keep pytest from collecting this class

    center: tuple[float, ...]
    scales: tuple[float, ...]
    weight: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        object.__setattr__(self, "scales", tuple(float(s) for s in self.scales))
        if len(self.center) != len(self.scales) or any(s <= 0 for s in self.scales):
            raise ConstraintError("test function needs one positive scale per axis")

    @property
    def dim(self) -> int:
        return len(self.center)

    @property
    def support(self) -> tuple[tuple[float, float], ...]:
        return tuple((c - s, c + s) for c, s in zip(self.center, self.scales))

    def evaluate(self, coords):
        """Values and gradient on the tensor grid spanned by 1D ``coords``."""
        vals, ders = [], []
        for z, c, s in zip(coords, self.center, self.scales):
            r = (np.asarray(z, dtype=float) - c) / s
            vals.append(bump(r))
            ders.append(bump_derivative(r) / s)
        phi = self.weight * _outer(vals)
        grads = [self.weight * _outer(vals[:a] + [ders[a]] + vals[a + 1:])
                 for a in range(self.dim)]
        return phi, grads

    def __mul__(self, a):
        return LinearCombination(((float(a), self),))

    __rmul__ = __mul__

    def __add__(self, other):
        return LinearCombination(((1.0, self),)) + other


@dataclass(frozen=True)
class LinearCombination:
    terms: tuple

    @property
    def dim(self) -> int:
        return self.terms[0][1].dim

    @property
    def support(self):
        boxes = [t.support for _, t in self.terms]
        return tuple((min(b[a][0] for b in boxes), max(b[a][1] for b in boxes))
                     for a in range(self.dim))

    @property
    def scales(self):
        return tuple(min(t.scales[a] for _, t in self.terms) for a in range(self.dim))

    @property
    def center(self):
        return self.terms[0][1].center

    def evaluate(self, coords):
        phi, grads = None, None
        for a, t in self.terms:
            p, g = t.evaluate(coords)
            phi = a * p if phi is None else phi + a * p
            grads = [a * gi for gi in g] if grads is None else [x + a * gi for x, gi in zip(grads, g)]
        return phi, grads

    def __mul__(self, a):
        return LinearCombination(tuple((a * c, t) for c, t in self.terms))

    __rmul__ = __mul__

    def __add__(self, other):
        if isinstance(other, TestFunction):
            other = LinearCombination(((1.0, other),))
        return LinearCombination(self.terms + other.terms)


def _outer(factors):
    out = factors[0]
    for f in factors[1:]:
        out = np.multiply.outer(out, f)
    return out


def load_test_functions(path) -> list[TestFunction]:
    """Read a JSON list of ``{"center": [t, x], "scales": [st, sx]}`` objects."""
    path = Path(path)
    try:
        spec = json.loads(path.read_text())
        return [TestFunction(tuple(item["center"]), tuple(item["scales"]),
                             float(item.get("weight", 1.0))) for item in spec]
    except FileNotFoundError as exc:
        raise DataError(f"missing test-function file {path}") from exc
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise DataError(f"malformed test-function file {path}: {exc!r}") from exc


@dataclass(frozen=True)
class DefectReport:
    pairings: list
    max_abs: float
    sign_summary: dict

    def values(self) -> np.ndarray:
        return np.array([v for _, v in self.pairings])


def _time_weights(times):
    w = np.zeros_like(times)
    dt = np.diff(times)
    w[:-1] += 0.5 * dt
    w[1:] += 0.5 * dt
    return w


def _pairing(traj: Trajectory, eta, q, phi) -> float:
    x = traj.grid.coords(0)
    t = traj.times
    (t0, t1), (x0, x1) = phi.support
    if not (t[0] < t0 and t1 < t[-1]):
        raise ConstraintError(f"test function time support {(t0, t1)} leaves ({t[0]}, {t[-1]})")
    if traj.grid.periodic_topology:
        lo, hi = traj.grid.lower[0], traj.grid.upper[0]
    else:
        lo, hi = x[0], x[-1]
    if not (lo < x0 and x1 < hi):
        raise ConstraintError(f"test function space support {(x0, x1)} leaves ({lo}, {hi})")
    dt_max = float(np.max(np.diff(t)))
    if dt_max > phi.scales[0] / 8.0:
        raise ConstraintError(f"time step {dt_max:g} exceeds the test-function time scale / 8")

    it = np.flatnonzero((t >= t0) & (t <= t1))
    ix = np.flatnonzero((x >= x0) & (x <= x1))
    it = np.arange(max(it[0] - 1, 0), min(it[-1] + 2, len(t)))
    ix = np.arange(max(ix[0] - 1, 0), min(ix[-1] + 2, len(x)))
    _, (dphi_dt, dphi_dx) = phi.evaluate((t[it], x[ix]))
    wt = _time_weights(t)[it]
    wx = traj.grid.quadrature_weights(0)[ix]
    integrand = dphi_dt * eta[np.ix_(it, ix)] + dphi_dx * q[np.ix_(it, ix)]
    return float(wt @ integrand @ wx)


def weak_residual(traj: Trajectory, ep: EntropyPair, phis) -> DefectReport:
    """Pair the entropy equation with each test function (see module docstring)."""
    eta = ep.eta(traj.data)
    q = ep.q(1, traj.data)
    pairings = [(i, _pairing(traj, eta, q, phi)) for i, phi in enumerate(phis)]
    values = np.array([v for _, v in pairings])
    tol = 1e-12 * max(1.0, float(np.max(np.abs(values)))) if len(values) else 0.0
    summary = {"positive": int(np.sum(values > tol)), "negative": int(np.sum(values < -tol)),
               "zero": int(np.sum(np.abs(values) <= tol))}
    return DefectReport(pairings, float(np.max(np.abs(values))) if len(values) else 0.0, summary)


# -- dissipation ---------------------------------------------------------------

def _window_indices(traj, window):
    x = traj.grid.coords(0)
    if window is None:
        return np.arange(len(x))
    idx = np.flatnonzero((x >= window[0]) & (x <= window[1]))
    if len(idx) < 3:
        raise ConstraintError(f"window {window} holds fewer than three grid points")
    return idx


def _time_indices(traj, t_range):
    if t_range is None:
        return np.arange(len(traj.times))
    idx = np.flatnonzero((traj.times >= t_range[0]) & (traj.times <= t_range[1]))
    if len(idx) < 2:
        raise ConstraintError(f"time range {t_range} holds fewer than two snapshots")
    return idx


def detect_shocks(u: np.ndarray) -> np.ndarray:
    """Indices j whose jump |u_{j+1} - u_j| exceeds 10x the mean absolute increment."""
    inc = np.abs(np.diff(u, axis=0))
    if inc.ndim > 1:
        inc = inc.max(axis=-1)
    mean = inc.mean() if inc.size else 0.0
    if mean == 0.0:
        return np.array([], dtype=int)
    return np.flatnonzero(inc > SHOCK_FACTOR * mean)


def dissipation_rate(traj: Trajectory, ep: EntropyPair, window=None, t_range=None) -> float:
    """Mean entropy dissipation rate inside a spatial window.

    ``D = -(d/dt int_window eta dx) - (q(x_right) - q(x_left))``, averaged over
    the selected times (the time derivative is integrated exactly, i.e. the
    entropy change is telescoped).
    """
    ix = _window_indices(traj, window)
    it = _time_indices(traj, t_range)
    u = traj.data[np.ix_(it, ix)]
    t = traj.times[it]
    w = traj.grid.quadrature_weights(0)[ix].copy()
    w[0] = w[-1] = 0.5 * traj.grid.h[0]
    S = ep.eta(u) @ w
    flux = ep.q(1, u[:, -1]) - ep.q(1, u[:, 0])
    duration = t[-1] - t[0]
    return float(-(S[-1] - S[0]) / duration - np.trapezoid(flux, t) / duration)


def dissipation_series(traj: Trajectory, ep: EntropyPair, window=None):
    """Per-snapshot rates using centred differences of the windowed entropy."""
    ix = _window_indices(traj, window)
    u = traj.data[:, ix]
    w = traj.grid.quadrature_weights(0)[ix].copy()
    w[0] = w[-1] = 0.5 * traj.grid.h[0]
    S = ep.eta(u) @ w
    flux = ep.q(1, u[:, -1]) - ep.q(1, u[:, 0])
    return -np.gradient(S, traj.times) - flux


def shock_dissipation_rate(traj: Trajectory, ep: EntropyPair, window=None, t_range=None) -> float:
    """Dissipation rate of the single shock inside ``window``.

    Raises :class:`ConstraintError` when the last snapshot of the time range
    shows no shock, or more than one separated jump cluster.
    """
    ix = _window_indices(traj, window)
    it = _time_indices(traj, t_range)
    flagged = detect_shocks(traj.data[it[-1], ix])
    if flagged.size == 0:
        raise ConstraintError("no shock detected in the window")
    if np.any(np.diff(flagged) > 2):
        raise ConstraintError("several separated shocks detected in the window")
    return dissipation_rate(traj, ep, window, t_range)


# -- global budget -------------------------------------------------------------

@dataclass(frozen=True)
class EntropyBudget:
    times: np.ndarray
    total_entropy: np.ndarray
    entropy_rate: np.ndarray
    boundary_flux: np.ndarray
    delta_list: np.ndarray
    boundary_flux_sup: np.ndarray
    cutoff_entropy: np.ndarray  # (len(delta_list), len(times))
    layer_volume: np.ndarray
    eta_sup: float
    delta0: float
    notes: list = dc_field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "delta0": self.delta0,
            "eta_sup": self.eta_sup,
            "deltas": self.delta_list.tolist(),
            "boundary_flux_sup": self.boundary_flux_sup.tolist(),
            "layer_volume": self.layer_volume.tolist(),
            "max_cutoff_gap": np.max(np.abs(self.cutoff_entropy - self.total_entropy),
                                     axis=1).tolist(),
            "entropy_drift": float(self.total_entropy[-1] - self.total_entropy[0]),
            "notes": list(self.notes),
        }


def entropy_budget(traj: Trajectory, ep: EntropyPair, delta_list) -> EntropyBudget:
    """Total entropy, boundary-layer normal flux and cutoff-weighted entropy.

    For each width delta the layer is ``{x : d(x, boundary) < delta/2}``; the
    normal flux sup is taken over the layer and all stored times, and the cutoff
    entropy is ``int eta(u) chi(d(x)/delta) dx``.
    """
    grid = traj.grid
    if grid.periodic_topology:
        raise ConstraintError("entropy budgets need a bounded domain")
    delta0 = 0.5 * min(grid.length)
    deltas = np.asarray(delta_list, dtype=float)
    if deltas.size == 0 or np.any(deltas <= 0) or np.any(deltas >= delta0 / 2):
        raise ConstraintError(f"every delta must lie in (0, {delta0 / 2:g})")

    x = grid.coords(0)
    dist = grid.boundary_distance()
    normal = np.where(x - grid.lower[0] <= grid.upper[0] - x, -1.0, 1.0)
    w = grid.quadrature_weights(0)
    eta = ep.eta(traj.data)
    normal_flux = ep.q(1, traj.data) * normal
    total = eta @ w
    rate = np.gradient(total, traj.times)
    boundary = normal_flux[:, 0] + normal_flux[:, -1]

    sups, cutoff, volumes = [], [], []
    for delta in deltas:
        layer = dist < delta / 2
        sups.append(float(np.max(np.abs(normal_flux[:, layer]))) if layer.any() else 0.0)
        cutoff.append(eta @ (w * chi_profile(dist / delta)))
        volumes.append(min(delta, grid.length[0]))
    return EntropyBudget(traj.times, total, rate, boundary, deltas, np.array(sups),
                         np.array(cutoff), np.array(volumes), float(np.max(np.abs(eta))),
                         delta0, ["boundary-flux sup taken over stored times only"])
