"""
Friedrichs mollifiers on uniform grids, smooth cutoffs and localisation.

The kernel is the standard exponential bump ``exp(-1 / (1 - |x/eps|^2))``
sampled on the grid and normalised so that its discrete mass is exactly one.
Bounded fields are mollified by extending them by zero and treating the padded
array as periodic, so there are no one-sided kernels anywhere.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np
import scipy.fft

from .errors import ConstraintError
from .grid_fields import Field, Grid, PERIODIC

DIRECT_MAX_TAPS = 64


def bump(r):
    """Unnormalised bump ``exp(-1/(1-r^2))`` on ``|r| < 1``, zero elsewhere."""
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    inside = np.abs(r) < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - r[inside] ** 2))
    return out


def bump_derivative(r):
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    inside = np.abs(r) < 1.0
    ri = r[inside]
    out[inside] = np.exp(-1.0 / (1.0 - ri ** 2)) * (-2.0 * ri / (1.0 - ri ** 2) ** 2)
    return out


def _g(t):
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def _dg(t):
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos]) / t[pos] ** 2
    return out


def smooth_step(t):
    """C-infinity step: 0 for t <= 0, 1 for t >= 1, monotone in between."""
    t = np.asarray(t, dtype=float)
    a, b = _g(t), _g(1.0 - t)
    return a / (a + b)


def smooth_step_derivative(t):
    t = np.asarray(t, dtype=float)
    a, b = _g(t), _g(1.0 - t)
    da, db = _dg(t), _dg(1.0 - t)
    return (da * b + a * db) / (a + b) ** 2


@dataclass(frozen=True)
class CutoffProfile:
    """Smooth monotone transition from 0 (below ``start``) to 1 (above ``stop``)."""

    kind: str
    start: float
    stop: float

    def __post_init__(self):
        if not self.start < self.stop:
            raise ConstraintError("cutoff breakpoints must satisfy start < stop")

    def __call__(self, s):
        out = smooth_step((np.asarray(s, dtype=float) - self.start) / (self.stop - self.start))
        return out if out.ndim else float(out)

    def derivative(self, s):
        width = self.stop - self.start
        out = smooth_step_derivative((np.asarray(s, dtype=float) - self.start) / width) / width
        return out if out.ndim else float(out)


BOUNDARY_LAYER = CutoffProfile("boundary-layer", 0.25, 0.5)


def chi_profile(s):
    """Boundary-layer cutoff: 0 on [0, 1/4], 1 on [1/2, inf)."""
    return BOUNDARY_LAYER(s)


def chi_derivative(s):
    return BOUNDARY_LAYER.derivative(s)


@dataclass(frozen=True, eq=False)
class MollifierKernel:
    epsilon: float
    h: tuple[float, ...]
    grid_stencil: np.ndarray
    mass: float
    _spectra: dict = dc_field(default_factory=dict, repr=False)

    @property
    def radius_cells(self) -> tuple[int, ...]:
        return tuple((s - 1) // 2 for s in self.grid_stencil.shape)

    @property
    def taps(self) -> int:
        return int(self.grid_stencil.size)

    @property
    def weights(self) -> np.ndarray:
        """Stencil times cell volume; sums to one."""
        return self.grid_stencil * float(np.prod(self.h))

    def spectrum(self, shape: tuple[int, ...]) -> np.ndarray:
        """Real FFT of the kernel wrapped onto a periodic array of ``shape``."""
        spec = self._spectra.get(shape)
        if spec is None:
            image = np.zeros(shape)
            m = self.radius_cells
            if any(2 * mi + 1 > n for mi, n in zip(m, shape)):
                raise ConstraintError("kernel support wider than the periodic grid")
            index = np.ix_(*[np.arange(-mi, mi + 1) % n for mi, n in zip(m, shape)])
            image[index] = self.weights
            spec = scipy.fft.rfftn(image)
            self._spectra[shape] = spec
        return spec


def make_kernel(grid: Grid, epsilon: float) -> MollifierKernel:
    h = grid.h
    if epsilon < 2.0 * max(h) * (1 - 1e-12):
        raise ConstraintError(
            f"epsilon={epsilon:g} is below 2h={2 * max(h):g}; the kernel is unresolved")
    if epsilon >= min(grid.length) / 4.0:
        raise ConstraintError(
            f"epsilon={epsilon:g} must stay below a quarter of the domain length")
    m = [int(np.floor(epsilon / hi * (1 + 1e-12))) for hi in h]
    offsets = np.meshgrid(*[np.arange(-mi, mi + 1) * hi for mi, hi in zip(m, h)],
                          indexing="ij")
    r = np.sqrt(sum(o * o for o in offsets)) / epsilon
    stencil = bump(r)
    stencil /= stencil.sum() * float(np.prod(h))
    mass = float(stencil.sum() * np.prod(h))
    stencil.flags.writeable = False
    return MollifierKernel(float(epsilon), tuple(h), stencil, mass)


def _convolve_direct(data: np.ndarray, kernel: MollifierKernel) -> np.ndarray:
    out = np.zeros_like(data)
    w = kernel.weights
    m = kernel.radius_cells
    axes = tuple(range(len(m)))
    for idx in np.ndindex(*w.shape):
        weight = w[idx]
        if weight == 0.0:
            continue
        shift = tuple(i - mi for i, mi in zip(idx, m))
        out += weight * np.roll(data, shift, axis=axes)
    return out


def _spectrum_of(f: Field, data: np.ndarray, key) -> np.ndarray:
    # Fields are immutable, so the forward transform can be cached on them.
    spec = f._cache.get(key) if f is not None else None
    if spec is None:
        spec = scipy.fft.rfftn(data, axes=tuple(range(data.ndim - 1)))
        if f is not None:
            f._cache[key] = spec
    return spec


def _convolve_fft(data: np.ndarray, kernel: MollifierKernel, owner=None, key=None) -> np.ndarray:
    shape = data.shape[:-1]
    axes = tuple(range(len(shape)))
    spec = _spectrum_of(owner, data, key)
    kspec = kernel.spectrum(shape)
    return scipy.fft.irfftn(spec * kspec[..., None], s=shape, axes=axes)


def extend_periodic(f: Field, pad: int = 0) -> Field:
    """Zero-pad a bounded field and reinterpret it on a periodic grid.

    Node ``j`` of the bounded grid becomes cell ``j + pad`` of the periodic grid,
    with identical coordinates.
    """
    if f.grid.periodic_topology:
        return f
    g = f.grid
    h = np.array(g.h)
    n = np.array(g.n) + 2 * pad
    lower = np.array(g.lower) - (pad + 0.5) * h
    grid = Grid(tuple(n), tuple(lower), tuple(lower + n * h), PERIODIC)
    width = [(pad, pad)] * g.dim + [(0, 0)]
    return Field(grid, np.pad(f.data, width))


def mollify(f: Field, k: MollifierKernel, method: str = "auto") -> Field:
    """Convolve ``f`` with the kernel, componentwise.

    ``method`` is ``"direct"``, ``"fft"`` or ``"auto"`` (direct sum for kernels
    with at most 64 taps).
    """
    if len(k.h) != f.grid.dim or not np.allclose(k.h, f.grid.h, rtol=1e-12, atol=0):
        raise ConstraintError("kernel and field live on different grids")
    if method == "auto":
        method = "direct" if k.taps <= DIRECT_MAX_TAPS else "fft"
    if method not in ("direct", "fft"):
        raise ConstraintError(f"unknown convolution method {method!r}")

    if f.grid.periodic_topology:
        data, pad, owner = f.data, 0, f
    else:
        pad = max(k.radius_cells)
        data = extend_periodic(f, pad).data
        owner = f
    if method == "direct":
        out = _convolve_direct(data, k)
    else:
        out = _convolve_fft(data, k, owner, ("rfftn", pad))
    if pad:
        out = out[tuple(slice(pad, -pad) for _ in range(f.grid.dim))]
    return Field(f.grid, out)


def localization_profile(grid: Grid, inner_margin: float, outer_margin: float) -> np.ndarray:
    """Smooth profile: 0 within ``inner_margin`` of the boundary, 1 beyond ``outer_margin``."""
    if grid.periodic_topology:
        raise ConstraintError("localisation needs a bounded grid")
    if not 0.0 < inner_margin < outer_margin < min(grid.length) / 2.0:
        raise ConstraintError("need 0 < inner_margin < outer_margin < L/2")
    d = grid.boundary_distance()
    return smooth_step((d - inner_margin) / (outer_margin - inner_margin))


def localize(f: Field, inner_margin: float, outer_margin: float) -> Field:
    profile = localization_profile(f.grid, inner_margin, outer_margin)
    return f.with_data(f.data * profile[..., None])
