"""Parameters, meshes and state containers shared by every scheme.

Arrays are laid out as ``p[i, k + K]`` with ``i = 0..I`` along x and
``k = -K..K`` along the internal state y.
"""
import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import MeshError, ParameterError


class Scaling(enum.Enum):
    DIFFUSIVE = "diffusive"
    HYPERBOLIC = "hyperbolic"


def _check_chi(chi):
    if not math.isfinite(chi) or abs(chi) * math.pi / 2 >= 1.0:
        raise ParameterError(
            f"|chi|*pi/2 must be < 1 so that the tumbling rate stays positive, got chi={chi}"
        )


@dataclass(frozen=True)
class ModelParams:
    """Physical parameters of the two-stream model.

    ``scaling`` selects how ``lambda0`` and ``tau`` enter the equations.
    Diffusive: epsilon = 1/lambda0 and tau is the adaptation time of the
    modified variant (1 for the standard scheme). Hyperbolic: tau plays the
    role of epsilon and lambda0 multiplies the tumbling rate.
    """

    G: float = 1.0
    chi: float = 0.5
    lambda0: float = 1.0
    tau: float = 1.0
    scaling: Scaling = Scaling.DIFFUSIVE

    def __post_init__(self):
        if isinstance(self.scaling, str):
            object.__setattr__(self, "scaling", Scaling(self.scaling.lower()))
        _check_chi(self.chi)
        if not (self.lambda0 > 0 and math.isfinite(self.lambda0)):
            raise ParameterError(f"lambda0 must be positive, got {self.lambda0}")
        if not (self.tau > 0 and math.isfinite(self.tau)):
            raise ParameterError(f"tau must be positive, got {self.tau}")
        if not math.isfinite(self.G) or self.G == 0:
            raise ParameterError(f"G must be a nonzero finite number, got {self.G}")

    @property
    def epsilon(self):
        if self.scaling is Scaling.DIFFUSIVE:
            return 1.0 / self.lambda0
        return self.tau

    @property
    def lambda_min(self):
        """Lower bound of the tumbling rate over the whole real line."""
        return 1.0 - abs(self.chi) * math.pi / 2

    def rate(self, y):
        return tumbling_response(y, self.chi)


@dataclass(frozen=True)
class GridSpec:
    I: int
    K: int
    dx: float
    dy: float
    dt: float
    y_halfwidth: float

    def __post_init__(self):
        if self.I < 1 or self.K < 1:
            raise MeshError(f"need I >= 1 and K >= 1, got I={self.I}, K={self.K}")
        if not (self.dt > 0 and self.dx > 0 and self.dy > 0):
            raise MeshError("dx, dy and dt must be positive")
        if not math.isclose(self.K * self.dy, self.y_halfwidth, rel_tol=1e-12):
            raise MeshError(
                f"K*dy = {self.K * self.dy} does not match y_halfwidth = {self.y_halfwidth}"
            )

    @property
    def x(self):
        return np.arange(self.I + 1) * self.dx

    @property
    def y(self):
        return np.arange(-self.K, self.K + 1) * self.dy

    @property
    def shape(self):
        return (self.I + 1, 2 * self.K + 1)

    def with_dt(self, dt):
        return replace(self, dt=dt)


def make_grid(I, dy_per_dx, y_halfwidth, dt):
    """Build a grid on x in [0, 1] with ``dy = dy_per_dx * dx``.

    ``K`` is derived from ``y_halfwidth / dy`` and must come out integral.
    """
    dx = 1.0 / I
    dy = dy_per_dx * dx
    Kf = y_halfwidth / dy
    K = int(round(Kf))
    if K < 1 or abs(K - Kf) > 1e-9 * max(1.0, Kf):
        raise MeshError(
            f"y half-width {y_halfwidth} is not an integer multiple of dy = {dy}"
        )
    return GridSpec(I=I, K=K, dx=dx, dy=y_halfwidth / K, dt=dt, y_halfwidth=y_halfwidth)


@dataclass
class TwoStreamField:
    p_plus: np.ndarray
    p_minus: np.ndarray

    def __post_init__(self):
        self.p_plus = np.asarray(self.p_plus, dtype=np.float64)
        self.p_minus = np.asarray(self.p_minus, dtype=np.float64)
        if self.p_plus.shape != self.p_minus.shape or self.p_plus.ndim != 2:
            raise MeshError(
                f"p_plus {self.p_plus.shape} and p_minus {self.p_minus.shape} must be equal 2-D shapes"
            )

    @classmethod
    def zeros(cls, grid):
        return cls(np.zeros(grid.shape), np.zeros(grid.shape))

    @classmethod
    def zeros_like(cls, other):
        return cls(np.zeros_like(other.p_plus), np.zeros_like(other.p_minus))

    def copy(self):
        return TwoStreamField(self.p_plus.copy(), self.p_minus.copy())

    @property
    def rho(self):
        return self.p_plus.sum(axis=1) + self.p_minus.sum(axis=1)

    def density(self, grid=None):
        x = grid.x if grid is not None else np.linspace(0.0, 1.0, self.p_plus.shape[0])
        return MacroDensity(x=x, rho=self.rho)

    def flipped(self):
        """Mirror image under y -> -y."""
        return TwoStreamField(self.p_plus[:, ::-1].copy(), self.p_minus[:, ::-1].copy())


@dataclass
class MacroDensity:
    x: np.ndarray
    rho: np.ndarray
    weights: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.float64)
        self.rho = np.asarray(self.rho, dtype=np.float64)
        if self.weights is None:
            self.weights = trapezoid_weights(len(self.rho))

    @property
    def dx(self):
        return float(self.x[1] - self.x[0]) if len(self.x) > 1 else 1.0

    def mass(self):
        return float(np.dot(self.weights, self.rho))

    def normalized(self):
        """Profile scaled to unit integral (``mass() * dx == 1``)."""
        total = self.mass() * self.dx
        if total <= 0:
            raise ValueError("cannot normalize a profile with nonpositive mass")
        return MacroDensity(self.x, self.rho / total, self.weights)


def trapezoid_weights(n):
    w = np.ones(n)
    if n > 1:
        w[0] = w[-1] = 0.5
    return w


def tumbling_response(y, chi):
    _check_chi(chi)
    return 1.0 - chi * np.arctan(y)


def lambda_antiderivative(y, chi):
    y = np.asarray(y, dtype=np.float64)
    return y - chi * (y * np.arctan(y) - 0.5 * np.log1p(y * y))


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


def cell_integral(a, b, chi=None, response=None):
    """Integral of the tumbling rate over ``[a, b]``.

    Uses the closed form for ``1 - chi*arctan(y)``. A user ``response``
    callable is integrated with 16-point Gauss-Legendre instead.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if response is None:
        _check_chi(chi)
        return lambda_antiderivative(b, chi) - lambda_antiderivative(a, chi)
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    pts = mid[..., None] + half[..., None] * _GL_NODES
    return half * np.sum(_GL_WEIGHTS * response(pts), axis=-1)


def lambda_bar(k_half, grid, params, response=None):
    """Integral of the rate over the y-cell ``[y_{k-1}, y_k]`` for ``k_half = k - 1/2``.

    Only interfaces between two grid nodes are accepted; the ghost cells past
    the y-boundary are handled by :func:`interface_lambda_bar`.
    """
    k_half = np.asarray(k_half, dtype=np.float64)
    if np.any(np.abs(k_half) > grid.K - 0.5 + 1e-12):
        raise MeshError(f"interface index outside the y-domain: {k_half}")
    lo = (k_half - 0.5) * grid.dy
    return cell_integral(lo, lo + grid.dy, params.chi, response)


LAMBDA_RULES = ("exact", "trapezoid")


def interface_lambda_bar(grid, params, rule="exact"):
    """Cell integrals at the ``2K + 2`` interfaces ``k - 1/2`` for ``k = -K..K+1``.

    With ``rule="exact"`` the two outermost interfaces, whose cells lie outside
    the y-domain, use ``dy * Lambda(+-Y)``: the rate is frozen at the boundary,
    which keeps the positivity bound intact. ``rule="trapezoid"`` replaces
    every integral by the trapezoid value on the extended node set.
    """
    K, dy = grid.K, grid.dy
    edges = np.arange(-K - 1, K + 1) * dy
    if rule == "trapezoid":
        lam = tumbling_response(edges, params.chi)
        lam_hi = tumbling_response(edges + dy, params.chi)
        return 0.5 * dy * (lam + lam_hi)
    if rule != "exact":
        raise ParameterError(f"unknown integration rule {rule!r}, expected one of {LAMBDA_RULES}")
    out = np.empty(2 * K + 2)
    out[1:-1] = cell_integral(edges[1:-1], edges[2:], params.chi)
    Y = grid.y_halfwidth
    out[0] = dy * tumbling_response(-Y, params.chi)
    out[-1] = dy * tumbling_response(Y, params.chi)
    return out


def initial_condition(grid, params):
    """Streams equal to ``1/|G|`` on ``|y| <= |G|/2`` and zero elsewhere."""
    G = abs(params.G)
    if grid.y_halfwidth < G / 2:
        raise MeshError(
            f"y-domain half-width {grid.y_halfwidth} is narrower than |G|/2 = {G / 2}"
        )
    y = grid.y
    col = np.where(np.abs(y) <= G / 2 * (1 + 1e-12), 1.0 / G, 0.0)
    p = np.broadcast_to(col, grid.shape).copy()
    return TwoStreamField(p, p.copy())


def apply_mirror_bc(field):
    """Overwrite the incoming streams at the walls with the outgoing ones."""
    out = field.copy()
    out.p_plus[0] = out.p_minus[0]
    out.p_minus[-1] = out.p_plus[-1]
    return out


def discrete_mass(field):
    rho = field.rho
    return float(np.dot(trapezoid_weights(len(rho)), rho))


def boundary_fluxes(field):
    """Net stream imbalance ``sum_k (p+ - p-)`` at ``x = 0`` and ``x = 1``."""
    j = field.p_plus.sum(axis=1) - field.p_minus.sum(axis=1)
    return float(j[0]), float(j[-1])
