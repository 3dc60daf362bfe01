"""
First-order finite-volume solutions of the 1D builtin systems.

Fluxes: exact Godunov for Burgers, Rusanov (local Lax-Friedrichs) for any
evolvable system.  Boundary conditions: ``periodic`` on periodic grids,
``outflow`` (copied ghost cells) or ``zero-state`` (ghost cells clamped to the
system's reference state) on bounded grids.  On bounded grids the nodes are the
cell centres, so the boundary faces sit half a cell outside ``[lo, hi]``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from scipy.optimize import brentq

from .errors import ConstraintError, DataError, DomainError
from .grid_fields import Field, Grid, read_field, write_field
from .systems import ConservationSystem, builtin

FLUXES = ("godunov", "rusanov")
BOUNDARY_CONDITIONS = ("periodic", "outflow", "zero-state")


@dataclass(frozen=True, eq=False)
class Trajectory:
    grid: Grid
    times: np.ndarray
    data: np.ndarray  # (T, n, k)
    system: str
    scheme: str = "exact"
    cfl: float | None = None
    bc: str | None = None

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        data = np.asarray(self.data, dtype=float)
        if data.ndim == 2:
            data = data[..., None]
        if times.ndim != 1 or len(times) < 2:
            raise ConstraintError("a trajectory needs at least two times")
        if np.any(np.diff(times) <= 0):
            raise ConstraintError("trajectory times must be strictly increasing")
        if data.shape[:2] != (len(times), self.grid.n[0]) or self.grid.dim != 1:
            raise ConstraintError(f"state array {data.shape} does not match times and grid")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "data", data)

    @property
    def states(self) -> list[Field]:
        return [Field(self.grid, s) for s in self.data]

    @property
    def components(self) -> int:
        return self.data.shape[-1]

    def index(self) -> dict:
        return {"system": self.system, "times": self.times.tolist(), "scheme": self.scheme,
                "cfl": self.cfl, "bc": self.bc}


# -- numerical fluxes --------------------------------------------------------

def _godunov_burgers(ul, ur):
    # exact Riemann flux for f(u) = u^2/2
    return np.maximum(0.5 * np.maximum(ul, 0.0) ** 2, 0.5 * np.minimum(ur, 0.0) ** 2)


def _rusanov(sys, ul, ur):
    a = np.maximum(sys.wave_speed(ul), sys.wave_speed(ur))[..., None]
    return 0.5 * (sys.fluxes[1].value(ul) + sys.fluxes[1].value(ur)) - 0.5 * a * (ur - ul)


def _with_ghosts(u, bc, reference):
    if bc == "periodic":
        return np.concatenate([u[-1:], u, u[:1]])
    if bc == "outflow":
        return np.concatenate([u[:1], u, u[-1:]])
    ghost = np.asarray(reference, dtype=float)[None, :]
    return np.concatenate([ghost, u, ghost])


def _resolve(system, params) -> ConservationSystem:
    if isinstance(system, ConservationSystem):
        return system
    return builtin(system, **(params or {}))[0]


def solve(system, u0: Field, t_end: float, cfl: float = 0.5, flux: str = "godunov",
          bc: str = "periodic", stride: int = 1, dt: float | None = None,
          params: dict | None = None) -> Trajectory:
    """Advance ``u0`` to ``t_end`` and record every ``stride``-th step (plus the last).

    With ``dt`` given the step is fixed (it must satisfy the CFL bound);
    otherwise ``dt = cfl * h / max wave speed`` is recomputed every step.
    """
    sys = _resolve(system, params)
    if not sys.evolvable or sys.d != 1:
        raise ConstraintError(f"{sys.name} cannot be evolved by this 1D solver")
    if not 0.0 < cfl < 1.0:
        raise ConstraintError(f"cfl must lie in (0, 1), got {cfl}")
    if flux not in FLUXES:
        raise ConstraintError(f"flux must be one of {FLUXES}")
    if flux == "godunov" and sys.name != "burgers":
        raise ConstraintError("the exact Godunov flux is implemented for burgers only")
    if bc not in BOUNDARY_CONDITIONS:
        raise ConstraintError(f"bc must be one of {BOUNDARY_CONDITIONS}")
    grid = u0.grid
    if grid.dim != 1:
        raise ConstraintError("the solver works on 1D grids")
    if (bc == "periodic") != grid.periodic_topology:
        raise ConstraintError(f"bc={bc!r} does not match a {grid.topology} grid")
    if bc == "zero-state" and sys.reference_state is None:
        raise ConstraintError(f"{sys.name} has no reference state for zero-state boundaries")
    if u0.components != sys.k:
        raise ConstraintError(f"initial state has {u0.components} components, system has {sys.k}")
    if t_end <= 0 or stride < 1:
        raise ConstraintError("need t_end > 0 and stride >= 1")

    h = grid.h[0]
    u = np.array(u0.data, dtype=float)
    sys.domain.require(u, "initial state")
    if flux == "godunov":
        numerical_flux = lambda ul, ur: _godunov_burgers(ul, ur)  # noqa: E731
    else:
        numerical_flux = lambda ul, ur: _rusanov(sys, ul, ur)  # noqa: E731

    t = 0.0
    step = 0
    times, states = [0.0], [u.copy()]
    while t < t_end * (1 - 1e-14):
        speed = float(np.max(sys.wave_speed(u)))
        if dt is None:
            tau = cfl * h / speed if speed > 0 else cfl * h
        else:
            tau = float(dt)
            if tau * speed > cfl * h * (1 + 1e-12):
                raise ConstraintError(f"fixed dt={tau:g} violates cfl={cfl} at t={t:g}")
        tau = min(tau, t_end - t)
        ug = _with_ghosts(u, bc, sys.reference_state)
        F = numerical_flux(ug[:-1], ug[1:])
        u = u - (tau / h) * (F[1:] - F[:-1])
        t += tau
        step += 1
        inside = sys.domain.contains(u)
        if not np.all(inside):
            j = int(np.argmin(inside))
            raise DomainError(f"state {u[j].tolist()} left the domain of {sys.name} in cell {j} "
                              f"(x={grid.coords(0)[j]:.6g}) at t={t:.6g}",
                              point=u[j], location=(j, t))
        if step % stride == 0 or t >= t_end * (1 - 1e-14):
            times.append(t)
            states.append(u.copy())
    return Trajectory(grid, np.array(times), np.array(states), sys.name,
                      scheme=flux, cfl=cfl, bc=bc)


def resample(traj: Trajectory, stride_t: int = 1, stride_x: int = 1) -> Trajectory:
    """Coarsen a trajectory in time (decimation) and space.

    Periodic grids are coarsened by averaging blocks of ``stride_x`` cells, which
    gives the cell averages of the coarse grid; bounded node grids keep every
    ``stride_x``-th node.
    """
    if stride_t < 1 or stride_x < 1:
        raise ConstraintError("strides must be positive")
    keep = np.arange(0, len(traj.times), stride_t)
    if len(keep) < 2:
        raise ConstraintError(f"stride_t={stride_t} leaves fewer than two times")
    g = traj.grid
    data = traj.data[keep]
    if stride_x > 1:
        n = g.n[0]
        if g.periodic_topology:
            if n % stride_x:
                raise ConstraintError(f"stride_x={stride_x} does not divide n={n}")
            data = data.reshape(len(keep), n // stride_x, stride_x, -1).mean(axis=2)
            grid = Grid((n // stride_x,), g.lower, g.upper, g.topology)
        else:
            if (n - 1) % stride_x:
                raise ConstraintError(f"stride_x={stride_x} does not divide n-1={n - 1}")
            data = data[:, ::stride_x]
            grid = Grid(((n - 1) // stride_x + 1,), g.lower, g.upper, g.topology)
    else:
        grid = g
    return replace(traj, grid=grid, times=traj.times[keep], data=data)


def spacetime_field(traj: Trajectory, epsilon: float | None = None) -> Field:
    """View a uniformly sampled trajectory as a field on a bounded (t, x) grid.

    Joint space-time mollification is only meaningful when the time step is at
    most ``epsilon / 4``; larger steps are refused.
    """
    steps = np.diff(traj.times)
    dt = float(steps.mean())
    if np.max(np.abs(steps - dt)) > 1e-9 * dt:
        raise ConstraintError("space-time fields need uniformly spaced times")
    if epsilon is not None and dt > epsilon / 4.0:
        raise ConstraintError(f"time step {dt:g} exceeds epsilon/4={epsilon / 4:g}")
    x = traj.grid.coords(0)
    grid = Grid((len(traj.times), len(x)), (traj.times[0], x[0]), (traj.times[-1], x[-1]),
                "bounded")
    return Field(grid, traj.data)


# -- exact solutions used as oracles -------------------------------------------

def burgers_characteristics(u0, x, t: float, du0=None):
    """Smooth Burgers solution ``u(x, t) = u0(x - u t)`` before wave breaking.

    Solves ``xi + t u0(xi) = x`` for the foot point ``xi`` with Newton's method
    (``du0`` given) and falls back to bracketing for points that do not converge.
    """
    x = np.asarray(x, dtype=float)
    if t == 0:
        return np.asarray(u0(x), dtype=float)
    xi = x - t * np.asarray(u0(x), dtype=float)
    if du0 is not None:
        for _ in range(50):
            g = xi + t * u0(xi) - x
            dg = 1.0 + t * du0(xi)
            if np.any(dg <= 0):
                raise ConstraintError("characteristics cross: t is past the breaking time")
            step = g / dg
            xi = xi - step
            if np.max(np.abs(step)) < 1e-15 * (1 + np.max(np.abs(x))):
                break
    residual = np.abs(xi + t * u0(xi) - x)
    bad = residual > 1e-12 * (1 + np.abs(x))
    if np.any(bad):
        span = t * float(np.max(np.abs(u0(np.linspace(x.min() - 1, x.max() + 1, 4097)))))
        for i in np.flatnonzero(bad):
            xi.flat[i] = brentq(lambda s: s + t * u0(s) - x.flat[i],
                                x.flat[i] - span - 1e-12, x.flat[i] + span + 1e-12, xtol=1e-15)
    return np.asarray(u0(xi), dtype=float)


def burgers_riemann(ul: float, ur: float, x, t: float, x0: float = 0.0):
    """Entropy solution of the Burgers Riemann problem (shock or rarefaction fan)."""
    x = np.asarray(x, dtype=float)
    if t <= 0:
        return np.where(x < x0, ul, ur)
    xi = (x - x0) / t
    if ul > ur:
        return np.where(xi < 0.5 * (ul + ur), ul, ur)
    return np.clip(xi, ul, ur)


def sample_trajectory(fn, grid: Grid, times, system: str, scheme="exact") -> Trajectory:
    """Trajectory of point samples of ``fn(x, t)`` (returning (n,) or (n, k) arrays)."""
    x = grid.coords(0)
    data = np.array([np.asarray(fn(x, t), dtype=float) for t in times])
    return Trajectory(grid, np.asarray(times, dtype=float), data, system, scheme=scheme)


# -- file sets -----------------------------------------------------------------

def write_trajectory(traj: Trajectory, directory) -> Path:
    """Write ``index.json`` plus one ``step_NNNNN`` field pair per stored time."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for i, state in enumerate(traj.states):
        write_field(state, directory / f"step_{i:05d}")
    (directory / "index.json").write_text(json.dumps(traj.index(), indent=2) + "\n")
    return directory


def read_trajectory(directory) -> Trajectory:
    directory = Path(directory)
    try:
        index = json.loads((directory / "index.json").read_text())
    except FileNotFoundError as exc:
        raise DataError(f"no trajectory index in {directory}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"malformed trajectory index in {directory}: {exc}") from exc
    if not isinstance(index, dict) or not {"system", "times", "scheme", "cfl", "bc"} <= index.keys():
        raise DataError(f"trajectory index in {directory} lacks required keys")
    states = [read_field(directory / f"step_{i:05d}") for i in range(len(index["times"]))]
    grid = states[0].grid
    if any(s.grid != grid for s in states):
        raise DataError("trajectory steps live on different grids")
    try:
        return Trajectory(grid, np.array(index["times"], dtype=float),
                          np.array([s.data for s in states]), index["system"],
                          scheme=index["scheme"], cfl=index["cfl"], bc=index["bc"])
    except ConstraintError as exc:
        raise DataError(str(exc)) from exc
