"""
Conservation-law systems with generalized entropies.

A system ``sum_i d_{x_i} A_i(u) = 0`` is stored as a tuple of flux maps
``A_0..A_d`` on a box-shaped state domain.  An :class:`EntropyPair` carries the
row map ``B`` and the entropy fluxes ``q_0..q_d``; the pair is compatible when
``B(u) . grad A_i(u) = grad q_i(u)`` for every ``i``.

All maps act on arrays of states with shape ``(..., k)`` and return values of
shape ``(..., m)``, Jacobians ``(..., m, k)`` and Hessians ``(..., m, k, k)``.
"""

from __future__ import annotations

import inspect
import json
from dataclasses import dataclass, field as dc_field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.stats import qmc

from .errors import ConstraintError, DataError, DomainError
from .expressions import Expression

FD_RELATIVE_STEP = 1e-5
SAMPLE_MARGIN = 1e-3


@dataclass(frozen=True)
class StateDomain:
    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        if len(lo) != len(hi) or any(a >= b for a, b in zip(lo, hi)):
            raise ConstraintError("state domain needs lo_j < hi_j on every component")

    @property
    def k(self) -> int:
        return len(self.lo)

    @property
    def width(self) -> np.ndarray:
        return np.array(self.hi) - np.array(self.lo)

    def contains(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        return np.all((u > np.array(self.lo)) & (u < np.array(self.hi)), axis=-1)

    def require(self, u, what="state"):
        u = np.asarray(u, dtype=float)
        inside = self.contains(u)
        if not np.all(inside):
            bad = np.argwhere(~inside)[0] if inside.ndim else ()
            point = u[tuple(bad)] if inside.ndim else u
            raise DomainError(f"{what} {np.round(point, 12).tolist()} escapes the state "
                              f"domain {list(zip(self.lo, self.hi))}",
                              point=point, location=tuple(int(b) for b in bad))

    def includes(self, other: "StateDomain") -> bool:
        return all(a >= b for a, b in zip(other.lo, self.lo)) and \
            all(a <= b for a, b in zip(other.hi, self.hi))


@dataclass(frozen=True)
class VectorMap:
    """Smooth map from states (..., k) to (..., m) with closed-form derivatives."""

    value: Callable
    jacobian: Callable
    hessian: Callable | None = None
    m: int = 1
    domain: StateDomain | None = None

    def __call__(self, u):
        if self.domain is not None:
            self.domain.require(u)
        return self.value(np.asarray(u, dtype=float))


@dataclass(frozen=True)
class ConservationSystem:
    name: str
    k: int
    d: int
    l: int
    fluxes: tuple[VectorMap, ...]
    domain: StateDomain
    wave_speed: Callable | None = None
    reference_state: tuple[float, ...] | None = None
    params: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        if len(self.fluxes) != self.d + 1:
            raise ConstraintError(f"{self.name}: need d+1={self.d + 1} flux maps")
        if self.domain.k != self.k:
            raise ConstraintError(f"{self.name}: domain dimension differs from k")

    @property
    def evolvable(self) -> bool:
        return self.wave_speed is not None

    def flux(self, i: int, u) -> np.ndarray:
        self.domain.require(u)
        return self.fluxes[i].value(np.asarray(u, dtype=float))


@dataclass(frozen=True)
class EntropyPair:
    multiplier: VectorMap
    fluxes: tuple[VectorMap, ...]
    entropy: VectorMap | None = None

    def eta(self, u) -> np.ndarray:
        """Entropy density; falls back to the time flux ``q_0``."""
        m = self.entropy if self.entropy is not None else self.fluxes[0]
        return m.value(np.asarray(u, dtype=float))[..., 0]

    def q(self, i: int, u) -> np.ndarray:
        return self.fluxes[i].value(np.asarray(u, dtype=float))[..., 0]


@dataclass(frozen=True)
class CompatibilityReport:
    max_residual_compat: float
    max_residual_symmetry: float
    sample_count: int
    worst_point: tuple[float, ...]
    max_fd_discrepancy: float
    kind: str = "compatibility"

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "max_residual_compat": self.max_residual_compat,
            "max_residual_symmetry": self.max_residual_symmetry,
            "sample_count": self.sample_count,
            "worst_point": list(self.worst_point),
            "max_fd_discrepancy": self.max_fd_discrepancy,
        }


# -- sampling and finite differences ---------------------------------------

def sample_states(domain: StateDomain, samples: int, seed: int = 0) -> np.ndarray:
    """Scrambled Halton points strictly inside the box."""
    x = qmc.Halton(d=domain.k, scramble=True, seed=seed).random(samples)
    x = SAMPLE_MARGIN + (1.0 - 2.0 * SAMPLE_MARGIN) * x
    return np.array(domain.lo) + domain.width * x


def fd_jacobian(fn: Callable, u: np.ndarray, steps) -> np.ndarray:
    """Central-difference Jacobian (..., m, k) of ``fn`` at states ``u``."""
    cols = []
    for j, s in enumerate(np.broadcast_to(steps, (u.shape[-1],))):
        e = np.zeros(u.shape[-1])
        e[j] = s
        cols.append((fn(u + e) - fn(u - e)) / (2.0 * s))
    return np.stack(cols, axis=-1)


def fd_discrepancy(vmap: VectorMap, points, steps, order: int = 1) -> float:
    """Largest gap between the supplied derivative and its central difference.

    ``order=1`` checks the Jacobian against differences of the value; ``order=2``
    checks the Hessian against differences of the Jacobian.
    """
    points = np.asarray(points, dtype=float)
    if order == 1:
        return float(np.max(np.abs(fd_jacobian(vmap.value, points, steps)
                                   - vmap.jacobian(points))))
    if vmap.hessian is None:
        raise ConstraintError("map has no Hessian evaluator")
    fd = fd_jacobian(vmap.jacobian, points, steps)
    return float(np.max(np.abs(fd - vmap.hessian(points))))


# -- compatibility checks ------------------------------------------------------

def _check_dimensions(sys: ConservationSystem, ep: EntropyPair):
    if ep.multiplier.m != sys.l:
        raise ConstraintError(f"B has {ep.multiplier.m} components, system has l={sys.l}")
    if len(ep.fluxes) != sys.d + 1:
        raise ConstraintError(f"need d+1={sys.d + 1} entropy fluxes, got {len(ep.fluxes)}")
    if any(q.m != 1 for q in ep.fluxes):
        raise ConstraintError("entropy fluxes must be scalar maps")
    if any(A.m != sys.l for A in sys.fluxes):
        raise ConstraintError("every flux map must have l components")


def compatibility_residual(sys: ConservationSystem, ep: EntropyPair, u) -> np.ndarray:
    """``B(u) . grad A_i(u) - grad q_i(u)`` with shape (d+1, ..., k)."""
    u = np.asarray(u, dtype=float)
    sys.domain.require(u)
    B = ep.multiplier.value(u)
    out = []
    for A, q in zip(sys.fluxes, ep.fluxes):
        lhs = np.einsum("...j,...jk->...k", B, A.jacobian(u))
        out.append(lhs - q.jacobian(u)[..., 0, :])
    return np.stack(out)


def symmetry_residual(sys: ConservationSystem, ep: EntropyPair, u) -> np.ndarray:
    """Antisymmetric part of ``S_i[a, b] = sum_j dB_j/du_b dA_i^j/du_a``, shape (d+1, ..., k, k)."""
    u = np.asarray(u, dtype=float)
    sys.domain.require(u)
    dB = ep.multiplier.jacobian(u)
    out = []
    for A in sys.fluxes:
        S = np.einsum("...ja,...jb->...ab", A.jacobian(u), dB)
        out.append(S - np.swapaxes(S, -1, -2))
    return np.stack(out)


def _run_checks(sys, ep, samples, seed, domain, kind):
    _check_dimensions(sys, ep)
    domain = domain or sys.domain
    if not sys.domain.includes(domain):
        raise DomainError(f"sampling box {list(zip(domain.lo, domain.hi))} leaves the "
                          f"system domain of {sys.name}")
    u = sample_states(domain, samples, seed)
    sys.domain.require(u, "sample point")

    compat = np.abs(compatibility_residual(sys, ep, u)).max(axis=(0, 2))
    sym = np.abs(symmetry_residual(sys, ep, u)).max(axis=(0, 2, 3))

    steps = domain.width * FD_RELATIVE_STEP
    fd = 0.0
    for vmap in (*sys.fluxes, ep.multiplier, *ep.fluxes):
        scale = 1.0 + float(np.max(np.abs(vmap.jacobian(u))))
        fd = max(fd, fd_discrepancy(vmap, u, steps) / scale)

    worst = int(np.argmax(compat if kind == "compatibility" else sym))
    return CompatibilityReport(float(compat.max()), float(sym.max()), int(samples),
                               tuple(float(x) for x in u[worst]), fd, kind)


def check_compatibility(sys: ConservationSystem, ep: EntropyPair, samples: int = 1000,
                        seed: int = 0, domain: StateDomain | None = None) -> CompatibilityReport:
    """Sample ``|B . grad A_i - grad q_i|`` over the state domain.

    The report also carries the symmetry residual and the worst relative gap
    between each supplied Jacobian and its central finite difference.
    """
    return _run_checks(sys, ep, samples, seed, domain, "compatibility")


def check_symmetry(sys: ConservationSystem, ep: EntropyPair, samples: int = 1000,
                   seed: int = 0, domain: StateDomain | None = None) -> CompatibilityReport:
    return _run_checks(sys, ep, samples, seed, domain, "symmetry")


# -- builtin systems -----------------------------------------------------------

def _stack(*cols):
    return np.stack(np.broadcast_arrays(*cols), axis=-1)


def _matrix(rows):
    return np.stack([_stack(*r) for r in rows], axis=-2)


def _zeros(u, *shape):
    return np.zeros(u.shape[:-1] + shape)


def _identity_map(k: int) -> VectorMap:
    eye = np.eye(k)
    return VectorMap(lambda u: u.copy(),
                     lambda u: np.broadcast_to(eye, u.shape[:-1] + (k, k)).copy(),
                     lambda u: _zeros(u, k, k, k), m=k)


def _burgers():
    dom = StateDomain((-10.0,), (10.0,))
    A1 = VectorMap(lambda u: 0.5 * u ** 2, lambda u: u[..., None],
                   lambda u: np.ones(u.shape + (1, 1)), m=1)
    B = VectorMap(lambda u: u.copy(), lambda u: np.ones(u.shape + (1,)), m=1)
    q0 = VectorMap(lambda u: 0.5 * u ** 2, lambda u: u[..., None],
                   lambda u: np.ones(u.shape + (1, 1)), m=1)
    q1 = VectorMap(lambda u: u ** 3 / 3.0, lambda u: (u ** 2)[..., None],
                   lambda u: (2.0 * u)[..., None, None], m=1)
    sys = ConservationSystem("burgers", 1, 1, 1, (_identity_map(1), A1), dom,
                             wave_speed=lambda u: np.abs(u[..., 0]), reference_state=(0.0,))
    return sys, EntropyPair(B, (q0, q1), q0)


def _linear_advection(c=1.0):
    dom = StateDomain((-10.0,), (10.0,))
    A1 = VectorMap(lambda u: c * u, lambda u: np.full(u.shape + (1,), c),
                   lambda u: _zeros(u, 1, 1, 1), m=1)
    B = VectorMap(lambda u: u.copy(), lambda u: np.ones(u.shape + (1,)), m=1)
    q0 = VectorMap(lambda u: 0.5 * u ** 2, lambda u: u[..., None],
                   lambda u: np.ones(u.shape + (1, 1)), m=1)
    q1 = VectorMap(lambda u: 0.5 * c * u ** 2, lambda u: c * u[..., None],
                   lambda u: np.full(u.shape + (1, 1), c), m=1)
    sys = ConservationSystem("linear-advection", 1, 1, 1, (_identity_map(1), A1), dom,
                             wave_speed=lambda u: np.full(u.shape[:-1], abs(c)),
                             reference_state=(0.0,), params={"c": c})
    return sys, EntropyPair(B, (q0, q1), q0)


def _gas_dynamics(name, pressure, dpressure, d2pressure, energy, denergy, d2energy,
                  sound_speed, dom, reference, params):
    """Shared closed forms for (density, momentum) systems with barotropic pressure.

    ``energy`` is the internal-energy density e(r) with eta = m^2/(2r) + e(r);
    the entropy flux is q = (eta + p) m / r.
    """

    def A1(u):
        r, m = u[..., 0], u[..., 1]
        return _stack(m, m * m / r + pressure(r))

    def dA1(u):
        r, m = u[..., 0], u[..., 1]
        z = np.zeros_like(r)
        return _matrix([(z, z + 1.0), (-m * m / r ** 2 + dpressure(r), 2.0 * m / r)])

    def d2A1(u):
        r, m = u[..., 0], u[..., 1]
        z = np.zeros_like(r)
        first = _matrix([(z, z), (z, z)])
        second = _matrix([(2.0 * m * m / r ** 3 + d2pressure(r), -2.0 * m / r ** 2),
                          (-2.0 * m / r ** 2, 2.0 / r)])
        return np.stack([first, second], axis=-3)

    def eta(u):
        r, m = u[..., 0], u[..., 1]
        return (0.5 * m * m / r + energy(r))[..., None]

    def B(u):
        r, m = u[..., 0], u[..., 1]
        return _stack(-0.5 * m * m / r ** 2 + denergy(r), m / r)

    def dB(u):
        r, m = u[..., 0], u[..., 1]
        return _matrix([(m * m / r ** 3 + d2energy(r), -m / r ** 2), (-m / r ** 2, 1.0 / r)])

    # q = m^3/(2 r^2) + (e + p) m / r; with e' r = e + p for barotropic energies,
    # (e + p)/r = e'(r), so q = m^3/(2 r^2) + m e'(r).
    def q1(u):
        r, m = u[..., 0], u[..., 1]
        return (0.5 * m ** 3 / r ** 2 + m * denergy(r))[..., None]

    def dq1(u):
        r, m = u[..., 0], u[..., 1]
        return _stack(-m ** 3 / r ** 3 + m * d2energy(r), 1.5 * m * m / r ** 2 + denergy(r))[..., None, :]

    def d2q1(u):
        r, m = u[..., 0], u[..., 1]
        cross = -3.0 * m * m / r ** 3 + d2energy(r)
        H = _matrix([(3.0 * m ** 3 / r ** 4 + m * _d3(r), cross), (cross, 3.0 * m / r ** 2)])
        return H[..., None, :, :]

    # third derivative of the internal energy, needed only for the Hessian of q
    _d3 = d2energy.third

    def wave(u):
        r, m = u[..., 0], u[..., 1]
        return np.abs(m / r) + sound_speed(r)

    q0 = VectorMap(eta, lambda u: B(u)[..., None, :], lambda u: dB(u)[..., None, :, :], m=1)
    sys = ConservationSystem(name, 2, 1, 2,
                             (_identity_map(2), VectorMap(A1, dA1, d2A1, m=2)), dom,
                             wave_speed=wave, reference_state=reference, params=params)
    ep = EntropyPair(VectorMap(B, dB, m=2), (q0, VectorMap(q1, dq1, d2q1, m=1)), q0)
    return sys, ep


class _Derivative:
    """Callable with an attached higher derivative (keeps closed forms together)."""

    def __init__(self, fn, third):
        self.fn = fn
        self.third = third

    def __call__(self, r):
        return self.fn(r)


def _shallow_water(g=9.81):
    return _gas_dynamics(
        "shallow-water-1d",
        pressure=lambda h: 0.5 * g * h * h,
        dpressure=lambda h: g * h,
        d2pressure=lambda h: np.full_like(h, g),
        energy=lambda h: 0.5 * g * h * h,
        denergy=lambda h: g * h,
        d2energy=_Derivative(lambda h: np.full_like(h, g), lambda h: np.zeros_like(h)),
        sound_speed=lambda h: np.sqrt(g * h),
        dom=StateDomain((0.1, -10.0), (10.0, 10.0)),
        reference=(1.0, 0.0), params={"g": g})


def _isentropic_euler(kappa=1.0, gamma=2.0):
    if gamma <= 1.0:
        raise ConstraintError("isentropic Euler needs gamma > 1")
    k, gm = kappa, gamma
    return _gas_dynamics(
        "isentropic-euler-1d",
        pressure=lambda r: k * r ** gm,
        dpressure=lambda r: k * gm * r ** (gm - 1.0),
        d2pressure=lambda r: k * gm * (gm - 1.0) * r ** (gm - 2.0),
        energy=lambda r: k * r ** gm / (gm - 1.0),
        denergy=lambda r: k * gm * r ** (gm - 1.0) / (gm - 1.0),
        d2energy=_Derivative(lambda r: k * gm * r ** (gm - 2.0),
                             lambda r: k * gm * (gm - 2.0) * r ** (gm - 3.0)),
        sound_speed=lambda r: np.sqrt(k * gm * r ** (gm - 1.0)),
        dom=StateDomain((0.1, -10.0), (10.0, 10.0)),
        reference=(1.0, 0.0), params={"kappa": kappa, "gamma": gamma})


def _incompressible_euler_static():
    """State (v1, v2, v3, p); A_0 = (v, 0) is singular, so this is check-only."""
    k = 4
    dom = StateDomain((-1.0,) * k, (1.0,) * k)
    A0_jac = np.diag([1.0, 1.0, 1.0, 0.0])
    A0 = VectorMap(lambda u: np.concatenate([u[..., :3], _zeros(u, 1)], axis=-1),
                   lambda u: np.broadcast_to(A0_jac, u.shape[:-1] + (k, k)).copy(),
                   lambda u: _zeros(u, k, k, k), m=k)

    def spatial_flux(a):
        ea = np.eye(3)[a]

        def value(u):
            v, p = u[..., :3], u[..., 3:]
            return np.concatenate([v[..., a:a + 1] * v + p * ea, v[..., a:a + 1]], axis=-1)

        def jac(u):
            v = u[..., :3]
            J = _zeros(u, k, k)
            # d(v_a v_j)/dv_m = delta_am v_j + v_a delta_jm ; d(p delta_aj)/dp = delta_aj
            J[..., :3, a] += v
            J[..., :3, :3] += v[..., a, None, None] * np.eye(3)
            J[..., a, 3] = 1.0
            J[..., 3, a] = 1.0
            return J

        def hess(u):
            H = _zeros(u, k, k, k)
            for j in range(3):
                H[..., j, a, j] += 1.0
                H[..., j, j, a] += 1.0
            return H

        return VectorMap(value, jac, hess, m=k)

    def B(u):
        v, p = u[..., :3], u[..., 3]
        return np.concatenate([v, (p - 0.5 * np.sum(v * v, axis=-1))[..., None]], axis=-1)

    def dB(u):
        J = _zeros(u, k, k)
        J[..., :3, :3] = np.eye(3)
        J[..., 3, :3] = -u[..., :3]
        J[..., 3, 3] = 1.0
        return J

    def q0(u):
        return 0.5 * np.sum(u[..., :3] ** 2, axis=-1)[..., None]

    def dq0(u):
        return np.concatenate([u[..., :3], _zeros(u, 1)], axis=-1)[..., None, :]

    def d2q0(u):
        return np.broadcast_to(np.diag([1.0, 1.0, 1.0, 0.0]), u.shape[:-1] + (1, k, k)).copy()

    def entropy_flux(a):
        def value(u):
            v, p = u[..., :3], u[..., 3]
            return (v[..., a] * (0.5 * np.sum(v * v, axis=-1) + p))[..., None]

        def jac(u):
            v, p = u[..., :3], u[..., 3]
            G = _zeros(u, k)
            G[..., :3] = v[..., a, None] * v
            G[..., a] += 0.5 * np.sum(v * v, axis=-1) + p
            G[..., 3] = v[..., a]
            return G[..., None, :]

        def hess(u):
            v = u[..., :3]
            H = _zeros(u, k, k)
            H[..., :3, :3] = v[..., a, None, None] * np.eye(3)
            H[..., a, :3] += v
            H[..., :3, a] += v
            H[..., a, 3] = 1.0
            H[..., 3, a] = 1.0
            return H[..., None, :, :]

        return VectorMap(value, jac, hess, m=1)

    q0_map = VectorMap(q0, dq0, d2q0, m=1)
    sys = ConservationSystem("incompressible-euler-static", k, 3, k,
                             (A0, *(spatial_flux(a) for a in range(3))), dom)
    ep = EntropyPair(VectorMap(B, dB, m=k), (q0_map, *(entropy_flux(a) for a in range(3))), q0_map)
    return sys, ep


_BUILTINS = {
    "burgers": _burgers,
    "linear-advection": _linear_advection,
    "shallow-water-1d": _shallow_water,
    "isentropic-euler-1d": _isentropic_euler,
    "incompressible-euler-static": _incompressible_euler_static,
}

BUILTIN_NAMES = tuple(_BUILTINS)


def builtin(name: str, **params) -> tuple[ConservationSystem, EntropyPair]:
    """Closed-form system and entropy pair by name.

    Parameters: ``c`` for linear-advection, ``g`` for shallow-water-1d,
    ``kappa`` and ``gamma`` for isentropic-euler-1d.
    """
    try:
        factory = _BUILTINS[name]
    except KeyError:
        raise ConstraintError(f"unknown system {name!r}; choose from {', '.join(_BUILTINS)}") from None
    accepted = inspect.signature(factory).parameters
    unknown = sorted(set(params) - set(accepted))
    if unknown:
        raise ConstraintError(f"{name} takes no parameter(s) {', '.join(unknown)}")
    return factory(**params)


def asymmetric_pair() -> tuple[ConservationSystem, EntropyPair]:
    """A pair that violates the entropy condition: B = (u2, 0), A_1 = (u1^2, u2^2) on [1, 2]^2."""
    dom = StateDomain((1.0, 1.0), (2.0, 2.0))

    def A1_jac(u):
        z = np.zeros_like(u[..., 0])
        return _matrix([(2.0 * u[..., 0], z), (z, 2.0 * u[..., 1])])

    A1 = VectorMap(lambda u: u ** 2, A1_jac, m=2)
    B = VectorMap(lambda u: _stack(u[..., 1], np.zeros_like(u[..., 1])),
                  lambda u: np.broadcast_to(np.array([[0.0, 1.0], [0.0, 0.0]]),
                                            u.shape[:-1] + (2, 2)).copy(), m=2)
    zero = VectorMap(lambda u: _zeros(u, 1), lambda u: _zeros(u, 1, 2), m=1)
    sys = ConservationSystem("asymmetric-counterexample", 2, 1, 2, (_identity_map(2), A1), dom)
    return sys, EntropyPair(B, (zero, zero), zero)


# -- user systems from expression files -------------------------------------

def expression_map(sources, k, params, m=None) -> VectorMap:
    exprs = [Expression(s, k, params) for s in sources]
    if m is not None and len(exprs) != m:
        raise DataError(f"expected {m} expressions, got {len(exprs)}")

    def value(u):
        return np.stack([e.jet(u).v for e in exprs], axis=-1)

    def jac(u):
        return np.stack([e.jet(u).g for e in exprs], axis=-2)

    def hess(u):
        return np.stack([e.jet(u).H for e in exprs], axis=-3)

    return VectorMap(value, jac, hess, m=len(exprs))


def load_system(source) -> tuple[ConservationSystem, EntropyPair]:
    """Build a system from a JSON document (dict or path).

    Keys: ``k``, ``d``, ``l``, ``domain`` ([[lo, hi], ...]), ``fluxes``
    (d+1 lists of l expressions), ``entropy_multiplier`` (l expressions),
    ``entropy_fluxes`` (d+1 expressions) and optionally ``name``,
    ``parameters``, ``entropy`` and ``wave_speed``.
    """
    if not isinstance(source, dict):
        path = Path(source)
        try:
            source = json.loads(path.read_text())
        except FileNotFoundError as exc:
            raise DataError(f"missing system file {path}") from exc
        except json.JSONDecodeError as exc:
            raise DataError(f"malformed system file {path}: {exc}") from exc
    try:
        k, d, l = int(source["k"]), int(source["d"]), int(source["l"])
        params = source.get("parameters", {})
        box = np.asarray(source["domain"], dtype=float)
        dom = StateDomain(tuple(box[:, 0]), tuple(box[:, 1]))
        if len(source["fluxes"]) != d + 1:
            raise DataError(f"need d+1={d + 1} flux lists")
        fluxes = tuple(expression_map(f, k, params, l) for f in source["fluxes"])
        B = expression_map(source["entropy_multiplier"], k, params, l)
        if len(source["entropy_fluxes"]) != d + 1:
            raise DataError(f"need d+1={d + 1} entropy fluxes")
        qs = tuple(expression_map([q], k, params) for q in source["entropy_fluxes"])
        eta = expression_map([source["entropy"]], k, params) if "entropy" in source else None
        wave = None
        if "wave_speed" in source:
            w = Expression(source["wave_speed"], k, params)
            wave = lambda u: w(u)  # noqa: E731
    except (KeyError, TypeError, IndexError, ValueError) as exc:
        raise DataError(f"malformed system description: {exc!r}") from exc
    ref = tuple(source["reference_state"]) if "reference_state" in source else None
    sys = ConservationSystem(source.get("name", "user"), k, d, l, fluxes, dom,
                             wave_speed=wave, reference_state=ref, params=dict(params))
    return sys, EntropyPair(B, qs, eta)
