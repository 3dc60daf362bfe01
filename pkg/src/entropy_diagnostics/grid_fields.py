"""
Uniform grids, sampled fields and Hölder-regularity tools.

Periodic grids are cell centred (``x_j = lo + (j + 1/2) h`` with ``h = L / n``);
bounded grids are node based and include both endpoints (``h = L / (n - 1)``).
A :class:`Field` stores its samples as an array of shape ``grid.shape + (c,)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from .errors import ConstraintError, DataError

PERIODIC = "periodic"
BOUNDED = "bounded"

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class Grid:
    n: tuple[int, ...]
    lower: tuple[float, ...]
    upper: tuple[float, ...]
    topology: str = PERIODIC

    def __post_init__(self):
        n = tuple(int(v) for v in np.atleast_1d(self.n))
        lower = tuple(float(v) for v in np.atleast_1d(self.lower))
        upper = tuple(float(v) for v in np.atleast_1d(self.upper))
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        if len(n) not in (1, 2):
            raise ConstraintError(f"grids are 1D or 2D, got dim={len(n)}")
        if not len(lower) == len(upper) == len(n):
            raise ConstraintError("n, lower and upper must have one entry per axis")
        if min(n) < 8:
            raise ConstraintError(f"need at least 8 points per axis, got {n}")
        if any(hi <= lo for lo, hi in zip(lower, upper)):
            raise ConstraintError("upper bound must exceed lower bound on every axis")
        if self.topology not in (PERIODIC, BOUNDED):
            raise ConstraintError(f"unknown topology {self.topology!r}")

    @classmethod
    def periodic(cls, n, length=1.0, lower=0.0, dim=None):
        dim = dim or max(np.size(n), np.size(length), np.size(lower))
        n = tuple(np.broadcast_to(n, (dim,)).tolist())
        lo = tuple(np.broadcast_to(lower, (dim,)).astype(float).tolist())
        ln = np.broadcast_to(length, (dim,)).astype(float)
        return cls(n, lo, tuple((np.array(lo) + ln).tolist()), PERIODIC)

    @classmethod
    def bounded(cls, n, lower=0.0, upper=1.0, dim=None):
        dim = dim or max(np.size(n), np.size(lower), np.size(upper))
        n = tuple(np.broadcast_to(n, (dim,)).tolist())
        lo = tuple(np.broadcast_to(lower, (dim,)).astype(float).tolist())
        hi = tuple(np.broadcast_to(upper, (dim,)).astype(float).tolist())
        return cls(n, lo, hi, BOUNDED)

    @property
    def dim(self) -> int:
        return len(self.n)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.n

    @property
    def periodic_topology(self) -> bool:
        return self.topology == PERIODIC

    @property
    def length(self) -> tuple[float, ...]:
        return tuple(hi - lo for lo, hi in zip(self.lower, self.upper))

    @property
    def h(self) -> tuple[float, ...]:
        if self.periodic_topology:
            return tuple(L / n for L, n in zip(self.length, self.n))
        return tuple(L / (n - 1) for L, n in zip(self.length, self.n))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.h))

    def coords(self, axis: int = 0) -> np.ndarray:
        j = np.arange(self.n[axis], dtype=float)
        if self.periodic_topology:
            j += 0.5
        return self.lower[axis] + j * self.h[axis]

    def mesh(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*[self.coords(a) for a in range(self.dim)], indexing="ij"))

    def quadrature_weights(self, axis: int = 0) -> np.ndarray:
        """Trapezoid weights along one axis (plain ``h`` on periodic grids)."""
        w = np.full(self.n[axis], self.h[axis])
        if not self.periodic_topology:
            w[0] *= 0.5
            w[-1] *= 0.5
        return w

    def boundary_distance(self) -> np.ndarray:
        """Distance of every grid point to the boundary of a bounded grid."""
        if self.periodic_topology:
            raise ConstraintError("periodic grids have no boundary")
        axes = []
        for a in range(self.dim):
            x = self.coords(a)
            axes.append(np.minimum(x - self.lower[a], self.upper[a] - x))
        d = axes[0]
        for extra in axes[1:]:
            d = np.minimum.outer(d, extra)
        return d

    def header(self, components: int) -> dict:
        return {
            "dim": self.dim,
            "n": list(self.n),
            "h": list(self.h),
            "components": int(components),
            "topology": self.topology,
            "domain": [[lo, hi] for lo, hi in zip(self.lower, self.upper)],
        }


@dataclass(frozen=True, eq=False)
class Field:
    grid: Grid
    data: np.ndarray
    _cache: dict = dc_field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        data = np.array(self.data, dtype=np.float64)
        if data.shape == self.grid.shape:
            data = data[..., None]
        if data.ndim != self.grid.dim + 1 or data.shape[:-1] != self.grid.shape:
            raise ConstraintError(
                f"data shape {data.shape} does not match grid shape {self.grid.shape}")
        if not np.all(np.isfinite(data)):
            raise ConstraintError("field contains non-finite values")
        data.flags.writeable = False
        object.__setattr__(self, "data", data)

    @property
    def components(self) -> int:
        return self.data.shape[-1]

    @property
    def values(self) -> np.ndarray:
        """Samples with the component axis dropped for scalar fields."""
        return self.data[..., 0] if self.components == 1 else self.data

    def with_data(self, data) -> "Field":
        return Field(self.grid, data)

    def __add__(self, other):
        if isinstance(other, Field):
            return self.with_data(self.data + other.data)
        return self.with_data(self.data + other)

    def __sub__(self, other):
        if isinstance(other, Field):
            return self.with_data(self.data - other.data)
        return self.with_data(self.data - other)

    def __mul__(self, scalar):
        return self.with_data(self.data * scalar)

    __rmul__ = __mul__


@dataclass(frozen=True)
class HolderEstimate:
    alpha: float
    seminorm: float
    pair_count: int


def _splitmix64(seed: int, index: int) -> int:
    z = (seed * 0x9E3779B97F4A7C15 + (index + 1) * 0xBF58476D1CE4E5B9) & _MASK64
    z = (z + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def phase(seed: int, index: int) -> float:
    """Deterministic phase in [0, 2*pi) hashed from ``(seed, index)``."""
    return (_splitmix64(int(seed), int(index)) >> 11) * 2.0 ** -53 * 2.0 * np.pi


def weierstrass_terms(n_points: int, base: int) -> int:
    """Largest k with ``base**k`` at or below the Nyquist frequency ``n/2``."""
    k = 0
    while base ** (k + 1) * 2 <= n_points:
        k += 1
    return k


def make_weierstrass(grid: Grid, alpha: float, base: int = 2, seed: int = 0,
                     amplitude: float = 1.0) -> Field:
    """
    Sample a randomly phased Weierstrass series of Hölder exponent ``alpha``.

    In 1D the field is ``amplitude * sum_k base**(-alpha k) cos(2 pi base**k x / L + phi_k)``.
    In 2D it is the sum of an x series, a y series and a diagonal series with
    independent phases; the diagonal terms are built from separable products so
    no dense trigonometric evaluation over the full grid is needed.
    """
    if not 0.0 < alpha < 1.0:
        raise ConstraintError(f"alpha must lie in (0, 1), got {alpha}")
    if int(base) != base or base < 2:
        raise ConstraintError(f"base must be an integer >= 2, got {base}")
    if not grid.periodic_topology:
        raise ConstraintError("Weierstrass synthesis needs a periodic grid")
    base = int(base)
    K = weierstrass_terms(min(grid.n), base)
    theta = [2.0 * np.pi * (grid.coords(a) - grid.lower[a]) / grid.length[a]
             for a in range(grid.dim)]

    if grid.dim == 1:
        out = np.zeros(grid.n[0])
        for k in range(K + 1):
            out += base ** (-alpha * k) * np.cos(base ** k * theta[0] + phase(seed, k))
    else:
        out = np.zeros(grid.shape)
        for k in range(K + 1):
            w = base ** (-alpha * k)
            f = float(base ** k)
            px, py, pd = (phase(seed, 3 * k + j) for j in range(3))
            out += w * np.cos(f * theta[0] + px)[:, None]
            out += w * np.cos(f * theta[1] + py)[None, :]
            # cos(a + b + p) = cos a cos(b + p) - sin a sin(b + p)
            out += w * (np.outer(np.cos(f * theta[0]), np.cos(f * theta[1] + pd))
                        - np.outer(np.sin(f * theta[0]), np.sin(f * theta[1] + pd)))
    return Field(grid, amplitude * out)


def _increments(data: np.ndarray, lag: int, axis: int, periodic: bool) -> np.ndarray:
    if periodic:
        diff = np.roll(data, -lag, axis=axis) - data
    else:
        n = data.shape[axis]
        hi = np.take(data, np.arange(lag, n), axis=axis)
        lo = np.take(data, np.arange(0, n - lag), axis=axis)
        diff = hi - lo
    if diff.shape[-1] == 1:
        return np.abs(diff[..., 0])
    # scaled Euclidean norm, safe against underflow of tiny increments
    big = np.max(np.abs(diff), axis=-1)
    safe = np.where(big > 0, big, 1.0)
    return big * np.sqrt(np.sum((diff / safe[..., None]) ** 2, axis=-1))


def estimate_holder(f: Field, alpha: float) -> HolderEstimate:
    """
    Empirical C^{0,alpha} seminorm: the largest ``|f(x)-f(y)| / |x-y|**alpha``
    over all grid points and dyadic lags ``h, 2h, 4h, ...`` up to half the
    domain, taken along every axis.
    """
    if not 0.0 < alpha <= 1.0:
        raise ConstraintError(f"alpha must lie in (0, 1], got {alpha}")
    grid = f.grid
    best = 0.0
    pairs = 0
    for axis in range(grid.dim):
        n = grid.n[axis]
        h = grid.h[axis]
        half = grid.length[axis] / 2.0
        lag = 1
        while lag < n and lag * h <= half * (1 + 1e-12):
            inc = _increments(f.data, lag, axis, grid.periodic_topology)
            pairs += inc.size
            if inc.size:
                best = max(best, float(inc.max()) / (lag * h) ** alpha)
            lag *= 2
    return HolderEstimate(float(alpha), best, pairs)


def sup_norm(f: Field) -> float:
    return float(np.max(np.abs(f.data)))


def l2_norm(f: Field) -> float:
    w = f.grid.quadrature_weights(0)
    for a in range(1, f.grid.dim):
        w = np.multiply.outer(w, f.grid.quadrature_weights(a))
    return float(np.sqrt(np.sum(w[..., None] * f.data ** 2)))


def write_field(f: Field, stem) -> tuple[Path, Path]:
    """Write ``stem.json`` (header) and ``stem.f64`` (little-endian row-major data)."""
    stem = Path(stem)
    stem.parent.mkdir(parents=True, exist_ok=True)
    header_path = stem.with_name(stem.name + ".json")
    data_path = stem.with_name(stem.name + ".f64")
    header_path.write_text(json.dumps(f.grid.header(f.components), indent=2) + "\n")
    data_path.write_bytes(np.ascontiguousarray(f.data, dtype="<f8").tobytes())
    return header_path, data_path


def read_field(stem) -> Field:
    stem = Path(stem)
    if stem.suffix in (".json", ".f64"):
        stem = stem.with_suffix("")
    header_path = stem.with_name(stem.name + ".json")
    data_path = stem.with_name(stem.name + ".f64")
    try:
        header = json.loads(header_path.read_text())
        raw = data_path.read_bytes()
    except FileNotFoundError as exc:
        raise DataError(f"missing field file: {exc.filename}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"malformed header {header_path}: {exc}") from exc
    required = {"dim", "n", "h", "components", "topology", "domain"}
    if not isinstance(header, dict) or not required <= header.keys():
        raise DataError(f"header {header_path} lacks keys {sorted(required)}")
    try:
        domain = np.asarray(header["domain"], dtype=float)
        grid = Grid(tuple(header["n"]), tuple(domain[:, 0]), tuple(domain[:, 1]),
                    header["topology"])
    except (ConstraintError, IndexError, ValueError, TypeError) as exc:
        raise DataError(f"inconsistent header {header_path}: {exc}") from exc
    if grid.dim != header["dim"] or not np.allclose(grid.h, header["h"], rtol=1e-12):
        raise DataError(f"header {header_path} disagrees with its own dim/h entries")
    c = int(header["components"])
    expected = int(np.prod(grid.shape)) * c * 8
    if len(raw) != expected:
        raise DataError(f"{data_path} holds {len(raw)} bytes, expected {expected}")
    data = np.frombuffer(raw, dtype="<f8").reshape(grid.shape + (c,))
    try:
        return Field(grid, data)
    except ConstraintError as exc:
        raise DataError(str(exc)) from exc
