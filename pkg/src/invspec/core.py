"""Grids, quadrature, interpolation and the shared domain types.

Everything on the interval [0, pi]. All types are frozen dataclasses with
read-only arrays, so instances can be shared freely across threads; every
function here is pure.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.interpolate import BarycentricInterpolator, CubicSpline

from .errors import ConfigError, DomainError

PI = float(np.pi)

MIN_GRID_NODES = 8

#: |mu| below this is treated as an exact zero eigenvalue (degenerate rules).
ZERO_MU_TOL = 1e-10


class RuleKind(str, Enum):
    TRAPEZOID = "uniform-trapezoid"
    SIMPSON = "uniform-simpson"
    GAUSS = "gauss-legendre"


def _frozen(a) -> np.ndarray:
    out = np.ascontiguousarray(np.asarray(a, dtype=float))
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class Grid:
    """Quadrature grid on [0, pi]: strictly increasing nodes, positive weights."""

    nodes: np.ndarray
    weights: np.ndarray
    rule_kind: RuleKind

    def __post_init__(self):
        object.__setattr__(self, "nodes", _frozen(self.nodes))
        object.__setattr__(self, "weights", _frozen(self.weights))

    @property
    def n(self) -> int:
        return self.nodes.size

    def validate(self) -> None:
        x, w = self.nodes, self.weights
        if x.size != w.size:
            raise ConfigError("grid nodes and weights differ in length")
        if not np.all(np.diff(x) > 0):
            raise ConfigError("grid nodes must be strictly increasing")
        if x[0] < -1e-12 or x[-1] > PI + 1e-12:
            raise ConfigError("grid nodes must lie in [0, pi]")
        if not np.all(w > 0):
            raise ConfigError("grid weights must be positive")
        if abs(float(w.sum()) - PI) > 1e-12 * PI:
            raise ConfigError("grid weights must sum to pi")


def make_grid(n_nodes: int, rule_kind: RuleKind | str = RuleKind.GAUSS) -> Grid:
    """Build a quadrature grid covering [0, pi].

    Parameters
    ----------
    n_nodes : int
        Number of nodes, at least 8.  The composite Simpson rule additionally
        needs an odd count.
    rule_kind : RuleKind or str
        One of ``uniform-trapezoid``, ``uniform-simpson``, ``gauss-legendre``.
    """
    rule_kind = RuleKind(rule_kind)
    if n_nodes < MIN_GRID_NODES:
        raise ConfigError(f"n_nodes={n_nodes} below minimum {MIN_GRID_NODES}")
    if rule_kind is RuleKind.GAUSS:
        xi, wi = leggauss(n_nodes)
        nodes = (xi + 1.0) * (PI / 2.0)
        weights = wi * (PI / 2.0)
    else:
        nodes = np.linspace(0.0, PI, n_nodes)
        h = PI / (n_nodes - 1)
        if rule_kind is RuleKind.TRAPEZOID:
            weights = np.full(n_nodes, h)
            weights[0] = weights[-1] = h / 2.0
        else:
            if n_nodes % 2 == 0:
                raise ConfigError("uniform-simpson needs an odd node count")
            weights = np.full(n_nodes, 2.0 * h / 3.0)
            weights[1::2] = 4.0 * h / 3.0
            weights[0] = weights[-1] = h / 3.0
    grid = Grid(nodes, weights, rule_kind)
    grid.validate()
    return grid


def gauss_rule(n_nodes: int, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes/weights mapped to an arbitrary interval [a, b]."""
    xi, wi = leggauss(n_nodes)
    half = (b - a) / 2.0
    return a + (xi + 1.0) * half, wi * half


@dataclass(frozen=True)
class GridFunction:
    """Real samples attached to a grid."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values))
        if self.values.size != self.grid.n:
            raise ConfigError("values length does not match grid")
        if not np.all(np.isfinite(self.values)):
            raise ConfigError("grid function values must be finite")


@dataclass(frozen=True)
class Potential(GridFunction):
    """Sampled potential q on [0, pi]; its mean is (1/pi) * integral of q."""

    @property
    def mean(self) -> float:
        return integrate(self) / PI


@dataclass(frozen=True)
class BoundaryAngle:
    """Robin angle at the right endpoint; the left condition is Dirichlet.

    The admissible range (0, pi) keeps sin(beta) > 0, so the right condition
    y(pi) cos(beta) + y'(pi) sin(beta) = 0 never degenerates to Dirichlet.
    """

    beta: float
    ALPHA = PI  # left endpoint condition is fixed: y(0) = 0

    def __post_init__(self):
        if not (0.0 < self.beta < PI) or np.sin(self.beta) <= 0.0:
            raise ConfigError(f"beta={self.beta} must lie strictly inside (0, pi)")

    @property
    def cot(self) -> float:
        return float(np.cos(self.beta) / np.sin(self.beta))


def as_angle(beta: "BoundaryAngle | float") -> BoundaryAngle:
    return beta if isinstance(beta, BoundaryAngle) else BoundaryAngle(float(beta))


def integrate(f: GridFunction) -> float:
    """Quadrature of a grid function with its own rule's weights."""
    return float(np.dot(f.grid.weights, f.values))


def interpolant(f: GridFunction) -> Callable[[np.ndarray], np.ndarray]:
    """Callable interpolant: piecewise cubic on uniform grids, barycentric on
    Gauss grids (whose global polynomial interpolation is stable)."""
    if f.grid.rule_kind is RuleKind.GAUSS:
        bary = BarycentricInterpolator(f.grid.nodes, f.values)
        return lambda x: bary(x)
    spline = CubicSpline(f.grid.nodes, f.values)
    return lambda x: spline(x)


def interpolate(f: GridFunction, x: float) -> float:
    """Interpolated value at x in [0, pi]; exact at the grid nodes."""
    if x < -1e-12 or x > PI + 1e-12:
        raise DomainError(f"x={x} outside [0, pi]")
    idx = np.searchsorted(f.grid.nodes, x)
    if idx < f.grid.n and f.grid.nodes[idx] == x:
        return float(f.values[idx])
    return float(interpolant(f)(x))


# ---------------------------------------------------------------------------
# Analytic continuation helpers: trigonometric expressions in lambda = sqrt(mu)
# extended through mu <= 0 (hyperbolic for mu < 0, polynomial limits at 0).
# ---------------------------------------------------------------------------

_SMALL_MU = 1e-6


def musin(mu, x):
    """sin(lambda x)/lambda as a function of mu = lambda^2; equals x at mu = 0."""
    mu = np.asarray(mu, dtype=float)
    x = np.asarray(x, dtype=float)
    mu, x = np.broadcast_arrays(mu, x)
    out = np.empty(mu.shape, dtype=float)
    pos = mu > _SMALL_MU
    neg = mu < -_SMALL_MU
    mid = ~(pos | neg)
    if pos.any():
        lam = np.sqrt(mu[pos])
        out[pos] = np.sin(lam * x[pos]) / lam
    if neg.any():
        k = np.sqrt(-mu[neg])
        out[neg] = np.sinh(k * x[neg]) / k
    if mid.any():
        m, t = mu[mid], x[mid]
        t2 = t * t
        out[mid] = t * (1.0 - m * t2 / 6.0 * (1.0 - m * t2 / 20.0 * (1.0 - m * t2 / 42.0)))
    return out if out.ndim else float(out)


def mucos(mu, x):
    """cos(lambda x) as a function of mu = lambda^2 (cosh for mu < 0)."""
    mu = np.asarray(mu, dtype=float)
    x = np.asarray(x, dtype=float)
    mu, x = np.broadcast_arrays(mu, x)
    out = np.empty(mu.shape, dtype=float)
    pos = mu > _SMALL_MU
    neg = mu < -_SMALL_MU
    mid = ~(pos | neg)
    if pos.any():
        out[pos] = np.cos(np.sqrt(mu[pos]) * x[pos])
    if neg.any():
        out[neg] = np.cosh(np.sqrt(-mu[neg]) * x[neg])
    if mid.any():
        m, t = mu[mid], x[mid]
        t2 = t * t
        out[mid] = 1.0 - m * t2 / 2.0 * (1.0 - m * t2 / 12.0 * (1.0 - m * t2 / 30.0))
    return out if out.ndim else float(out)


def mucosm1(mu, x):
    """(cos(lambda x) - 1)/mu, stable for every mu; equals -x^2/2 at mu = 0.

    Uses cos(z) - 1 = -2 sin^2(z/2) (and the sinh analogue), so there is no
    cancellation even for tiny |mu|.
    """
    mu = np.asarray(mu, dtype=float)
    x = np.asarray(x, dtype=float)
    mu, x = np.broadcast_arrays(mu, x)
    out = np.empty(mu.shape, dtype=float)
    tiny = np.abs(mu) < 1e-14
    pos = (mu > 0) & ~tiny
    neg = (mu < 0) & ~tiny
    if pos.any():
        s = np.sin(np.sqrt(mu[pos]) * x[pos] / 2.0)
        out[pos] = -2.0 * s * s / mu[pos]
    if neg.any():
        s = np.sinh(np.sqrt(-mu[neg]) * x[neg] / 2.0)
        out[neg] = 2.0 * s * s / mu[neg]
    if tiny.any():
        out[tiny] = -x[tiny] ** 2 / 2.0
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# Spectral data
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SpectralData:
    """Paired eigenvalue/norming-constant sequences with their boundary angle.

    ``mu`` holds the (possibly negative) eigenvalues in increasing order;
    ``norming`` the squared eigenfunction norms.  ``c_fit`` is the drift
    constant of the eigenvalue tail, fitted from the data or supplied.
    Construction only enforces shape and finiteness; admissibility proper is
    the job of :func:`invspec.inverse.validate`, which must be able to report
    on defective inputs instead of refusing to hold them.
    """

    beta: float
    mu: np.ndarray
    norming: np.ndarray
    c_fit: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "mu", _frozen(self.mu))
        object.__setattr__(self, "norming", _frozen(self.norming))
        if self.mu.size != self.norming.size:
            raise ConfigError("mu and norming must have equal length")
        if not (np.all(np.isfinite(self.mu)) and np.all(np.isfinite(self.norming))):
            raise ConfigError("spectral data must be finite")

    @property
    def count(self) -> int:
        return self.mu.size

    @property
    def lambdas(self) -> np.ndarray:
        """sqrt(mu) where mu >= 0, NaN where the eigenvalue is negative."""
        with np.errstate(invalid="ignore"):
            return np.where(self.mu >= 0.0, np.sqrt(np.maximum(self.mu, 0.0)), np.nan)

    @property
    def k_weights(self) -> np.ndarray:
        """a_n * lambda_n^2 = a_n * mu_n; zero entries mark degenerate indices."""
        return self.norming * self.mu

    def to_json_dict(self) -> dict:
        return {
            "beta": float(self.beta),
            "count": int(self.count),
            "mu": [float(v) for v in self.mu],
            "a": [float(v) for v in self.norming],
            "c_fit": None if self.c_fit is None else float(self.c_fit),
        }

    def to_json(self, **extra) -> str:
        doc = self.to_json_dict()
        doc.update(extra)
        return json.dumps(doc, sort_keys=True, indent=2)

    @staticmethod
    def from_json(text: str) -> "SpectralData":
        doc = json.loads(text)
        try:
            data = SpectralData(
                beta=float(doc["beta"]),
                mu=np.asarray(doc["mu"], dtype=float),
                norming=np.asarray(doc["a"], dtype=float),
                c_fit=None if doc.get("c_fit") is None else float(doc["c_fit"]),
            )
        except KeyError as exc:  # pragma: no cover - defensive
            raise ConfigError(f"spectral JSON missing field {exc}") from exc
        if "count" in doc and int(doc["count"]) != data.count:
            raise ConfigError("spectral JSON count disagrees with array length")
        return data


# ---------------------------------------------------------------------------
# CSV serialization of grid functions (x,value with 17 significant digits)
# ---------------------------------------------------------------------------


def write_grid_function_csv(f: GridFunction, path) -> None:
    with open(path, "w") as fh:
        fh.write("x,value\n")
        for x, v in zip(f.grid.nodes, f.values):
            fh.write(f"{x:.17g},{v:.17g}\n")


def _grid_from_nodes(nodes: np.ndarray) -> Grid:
    nodes = np.asarray(nodes, dtype=float)
    if nodes.size < MIN_GRID_NODES:
        raise ConfigError("CSV grid needs at least 8 nodes")
    if abs(nodes[0]) > 1e-9 or abs(nodes[-1] - PI) > 1e-9:
        raise ConfigError("CSV grid must span [0, pi]")
    h = np.diff(nodes)
    if not np.all(h > 0):
        raise ConfigError("CSV nodes must be strictly increasing")
    if h.max() - h.min() > 1e-9 * h.mean():
        raise ConfigError("CSV nodes must be uniformly spaced")
    nodes = nodes.copy()
    nodes[0], nodes[-1] = 0.0, PI  # absorb roundoff from the 17-digit format
    step = PI / (nodes.size - 1)
    weights = np.full(nodes.size, step)
    weights[0] = weights[-1] = step / 2.0
    grid = Grid(nodes, weights, RuleKind.TRAPEZOID)
    grid.validate()
    return grid


def read_grid_function_csv(path) -> GridFunction:
    rows = _read_csv_rows(path)
    return GridFunction(_grid_from_nodes(rows[:, 0]), rows[:, 1])


def read_potential_csv(path) -> Potential:
    rows = _read_csv_rows(path)
    return Potential(_grid_from_nodes(rows[:, 0]), rows[:, 1])


def _read_csv_rows(path) -> np.ndarray:
    with open(path) as fh:
        header = fh.readline().strip()
        if header.replace(" ", "") != "x,value":
            raise ConfigError(f"{path}: expected header 'x,value'")
        try:
            rows = np.loadtxt(fh, delimiter=",", ndmin=2)
        except ValueError as exc:
            raise ConfigError(f"{path}: malformed CSV ({exc})") from exc
    if rows.shape[1] != 2:
        raise ConfigError(f"{path}: expected two columns")
    return rows


def sample_potential(func: Callable[[np.ndarray], np.ndarray], n_nodes: int = 257) -> Potential:
    """Sample a callable potential on a uniform trapezoid grid."""
    grid = make_grid(n_nodes, RuleKind.TRAPEZOID)
    return Potential(grid, np.asarray(func(grid.nodes), dtype=float) * np.ones(grid.n))
