"""Measurements on stress fields: ball norms, the local estimate, the
singular example, Nikolskii seminorms and Korn/Poincare ratios."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateRegionError, DomainError
from .orlicz import NonlinearityLaw, frob, stress, young_B_panels
from .solver import (DirichletProblem, Discretization, DiscreteVectorField, SolverConfig,
                     StructuredGrid, continuation_solve, initial_guess, manufactured_rhs,
                     polynomial_boundary)
from .tensorfields import PolyVectorField, singular_field, grad_stress, sample


@dataclass
class StressField:
    grid: StructuredGrid
    law: NonlinearityLaw
    values: np.ndarray                      # (num_nodes, n, n)
    meta: dict = field(default_factory=dict)


def stress_project(source, law: NonlinearityLaw, grid: StructuredGrid | None = None,
                   order: int = 3) -> StressField:
    """Nodal stress of a discrete solution (lumped projection) or of an exact field.

    For discrete sources the stress is evaluated at quadrature points and
    averaged to the nodes with the weights ``int N_a``.  Zero strain under a
    law singular at 0 gets stress 0; the number of such points is recorded.
    """
    if isinstance(source, DiscreteVectorField):
        grid = source.grid
        d = Discretization(grid, order)
        xi = d.strain_at_quad(source.values)
        zero = int(np.count_nonzero(frob(xi) == 0))
        S = stress(law, xi)                                   # (C, Q, n, n)
        wN = d.w[:, None] * d.ref.N                           # (Q, L)
        num = np.zeros((grid.num_nodes, grid.n, grid.n))
        den = np.zeros(grid.num_nodes)
        np.add.at(num, d.cell_nodes.ravel(),
                  np.einsum("qa,cqij->caij", wN, S).reshape(-1, grid.n, grid.n))
        np.add.at(den, d.cell_nodes.ravel(), np.tile(wN.sum(axis=0), grid.num_cells))
        return StressField(grid, law, num / den[:, None, None],
                           {"source": "discrete", "zero_strain_points": zero})
    if isinstance(source, PolyVectorField):
        if grid is None:
            raise DomainError("an exact field needs a grid to project onto")
        s = sample(source, grid.node_coords())
        zero = int(np.count_nonzero(frob(s.sym_grad) == 0))
        return StressField(grid, law, stress(law, s.sym_grad),
                           {"source": "exact", "zero_strain_points": zero})
    raise DomainError(f"cannot project stress from {type(source).__name__}")


def stress_at_quad(sf: StressField, order: int = 3):
    """Interpolated stress and its gradient at quadrature points.

    Returns ``(S[c, q, j, k], dS[c, q, i, j, k])`` from the nodal values.
    """
    d = Discretization(sf.grid, order)
    V = sf.values[d.cell_nodes]                               # (C, L, n, n)
    S = np.einsum("qa,cajk->cqjk", d.ref.N, V)
    dS = np.einsum("qai,cajk->cqijk", d.dN, V)
    return d, S, dS


@dataclass(frozen=True)
class BallRegion:
    center: tuple
    radius: float
    grid: StructuredGrid

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float)
        if c.shape != (self.grid.n,) or self.radius <= 0:
            raise DomainError("ball needs a center in R^n and a positive radius")
        lo = np.array(self.grid.lower)
        hi = np.array(self.grid.upper)
        if np.any(c - 2 * self.radius <= lo) or np.any(c + 2 * self.radius >= hi):
            raise DomainError("the doubled ball must lie inside the grid box")

    def mask(self, X, factor: float = 1.0):
        c = np.asarray(self.center, dtype=float)
        return np.linalg.norm(X - c, axis=-1) < factor * self.radius


@dataclass(frozen=True)
class BallNorms:
    l1_double: float
    l2: float
    grad_l2: float


def ball_norms(sf: StressField, region: BallRegion, order: int = 3) -> BallNorms:
    d, S, dS = stress_at_quad(sf, order)
    X = d.quad_points()
    inner = region.mask(X)
    outer = region.mask(X, 2.0)
    if not inner.any() or not outer.any():
        raise DegenerateRegionError("ball contains no quadrature points")
    w = np.broadcast_to(d.w, inner.shape)
    absS = frob(S)
    l1 = float(np.sum(w[outer] * absS[outer]))
    l2 = math.sqrt(float(np.sum(w[inner] * absS[inner] ** 2)))
    g2 = math.sqrt(float(np.sum(w[inner] * np.einsum("...ijk,...ijk->...", dS, dS)[inner])))
    return BallNorms(l1, l2, g2)


def l2_norm_on_ball(fn, region: BallRegion, factor: float = 2.0, order: int = 3) -> float:
    d = Discretization(region.grid, order)
    X = d.quad_points()
    m = region.mask(X, factor)
    if not m.any():
        raise DegenerateRegionError("ball contains no quadrature points")
    vals = np.asarray(fn(X[m]))
    w = np.broadcast_to(d.w, m.shape)[m]
    return math.sqrt(float(np.sum(w * np.sum(vals.reshape(len(w), -1) ** 2, axis=1))))


@dataclass(frozen=True)
class EstimateRatio:
    lhs: float
    rhs: float
    norms: BallNorms
    f_l2: float

    @property
    def ratio(self) -> float:
        return self.lhs / self.rhs


def estimate_constant(sf: StressField, region: BallRegion, f=None, order: int = 3) -> EstimateRatio:
    """Empirical constant of the local estimate: left side over right side.

    ``R^-1 |A|_{L2(B_R)} + |grad A|_{L2(B_R)}`` against
    ``|f|_{L2(B_2R)} + R^(-n/2-1) |A|_{L1(B_2R)}``.
    """
    norms = ball_norms(sf, region, order)
    R = region.radius
    n = sf.grid.n
    f_l2 = 0.0 if f is None else l2_norm_on_ball(f, region, 2.0, order)
    lhs = norms.l2 / R + norms.grad_l2
    rhs = f_l2 + R ** (-n / 2 - 1) * norms.l1_double
    if rhs == 0:
        raise DomainError("right-hand side vanishes; the ratio is undefined")
    return EstimateRatio(lhs, rhs, norms, f_l2)


# --- singular example ------------------------------------------------------

@dataclass
class ThresholdTrajectory:
    p: float
    deltas: list
    quadrature: list
    analytic: list
    classification: str
    increment_ratio: float
    growth_per_step: list


def singular_gradient_integral_exact(p: float, delta: float, n: int = 2) -> float:
    """Closed form of ``int_{[-1,1]^n, |x2| > delta} |grad A_p(eps u)|^2``."""
    e = 2 * p - 3
    core = math.log(1 / delta) if abs(e) < 1e-12 else (1 - delta ** e) / e
    return 2 * 4 ** (p - 1) * (p - 1) ** 2 * core * 2 ** (n - 1)


def singular_gradient_integral(p: float, delta: float, n: int = 2, order: int = 5) -> float:
    """Same integral by tensor Gauss quadrature of the chain-rule stress gradient.

    In ``x2`` the panels are dyadic from ``delta`` to 1 (the integrand is a
    power of ``|x2|``); the other axes use one Gauss panel on ``[-1, 1]``.
    """
    law = NonlinearityLaw.power(p)
    field = singular_field(n)
    x, w = np.polynomial.legendre.leggauss(order)
    edges = [delta]
    while edges[-1] * 2 < 1:
        edges.append(edges[-1] * 2)
    edges.append(1.0)
    lo, hi = np.array(edges[:-1]), np.array(edges[1:])
    x2 = (0.5 * (hi - lo)[:, None] * (x + 1) + lo[:, None]).ravel()
    w2 = (0.5 * (hi - lo)[:, None] * w).ravel()
    x2 = np.concatenate([x2, -x2])
    w2 = np.concatenate([w2, w2])
    # the integrand depends on x2 only, so the remaining axes contribute
    # their length; x1 is still sampled to exercise the full chain rule
    X1 = x[:, None] * np.ones_like(x2)[None, :]
    W = w[:, None] * w2[None, :]
    pts = np.zeros(X1.shape + (n,))
    pts[..., 0] = X1
    pts[..., 1] = x2[None, :]
    s = sample(field, pts.reshape(-1, n))
    G = grad_stress(law, s)
    dens = np.einsum("...ijk,...ijk->...", G, G).reshape(X1.shape)
    return float(np.sum(W * dens)) * 2 ** (n - 2)


def singular_threshold(p: float, deltas=(1e-1, 1e-2, 1e-3, 1e-4), n: int = 2,
                       order: int = 5) -> ThresholdTrajectory:
    if p <= 1:
        raise DomainError("need p > 1")
    deltas = list(deltas)
    if any(b >= a for a, b in zip(deltas, deltas[1:])) or not all(0 < d < 1 for d in deltas):
        raise DomainError("cutoffs must decrease inside (0, 1)")
    quad = [singular_gradient_integral(p, dlt, n, order) for dlt in deltas]
    exact = [singular_gradient_integral_exact(p, dlt, n) for dlt in deltas]
    inc = np.diff(quad)
    ratio = float(inc[-1] / inc[-2]) if len(inc) >= 2 else float("nan")
    growth = [float(b / a - 1) for a, b in zip(quad, quad[1:])]
    # increments of a convergent tail shrink geometrically; a log or power
    # blow-up keeps them from shrinking
    label = "convergent" if ratio < 0.99 else "divergent"
    return ThresholdTrajectory(p, deltas, quad, exact, label, ratio, growth)


# --- Nikolskii -------------------------------------------------------------

@dataclass(frozen=True)
class NikolskiiResult:
    l1: float
    seminorm: float
    worst_shift: tuple

    @property
    def norm(self) -> float:
        return self.l1 + self.seminorm


def nikolskii_seminorm(values: np.ndarray, grid: StructuredGrid, alpha: float,
                       region: BallRegion, q: float = 1.0,
                       directions=None) -> NikolskiiResult:
    """Discrete ``N^alpha_q`` quantities of nodal data on a ball.

    Translations run along the axes at ``m h`` for ``1 <= m <= R / (2 h)``;
    ``directions`` restricts them, e.g. ``[(1, +1)]`` for ``+x2`` only.
    Node sums with weight ``prod(h)`` stand in for integrals.
    """
    if not 0 < alpha <= 1:
        raise DomainError("alpha must lie in (0, 1]")
    n = grid.n
    vals = np.asarray(values, dtype=float).reshape(grid.node_shape + (-1,))
    absq = lambda V: np.sum(V * V, axis=-1) ** (q / 2)
    X = grid.node_coords().reshape(grid.node_shape + (n,))
    c = np.asarray(region.center)
    dist = np.linalg.norm(X - c, axis=-1)
    R = region.radius
    vol = grid.cell_volume
    inside = dist < R
    if not inside.any():
        raise DegenerateRegionError("no nodes inside the ball")
    l1 = float(np.sum(absq(vals)[inside]) * vol) ** (1 / q)
    if directions is None:
        directions = [(d, s) for d in range(n) for s in (1, -1)]
    best, arg = 0.0, None
    for d, sgn in directions:
        hd = grid.h[d]
        for m in range(1, int(math.floor(R / (2 * hd) + 1e-9)) + 1):
            shift = m * hd
            shifted = np.roll(vals, -sgn * m, axis=d)
            diff = shifted - vals
            keep = dist < R - shift
            # rolled values wrap around; every kept node has its partner inside B_R
            if not keep.any():
                continue
            val = float(np.sum(absq(diff)[keep]) * vol) ** (1 / q) / shift ** alpha
            if arg is None or val > best:
                best, arg = val, (d, sgn * m)
    if arg is None:
        raise DegenerateRegionError("ball admits no grid translation")
    return NikolskiiResult(l1, best, arg)


def nikolskii_alpha(upper_index: float) -> float:
    return min(1.0, 1.0 / (1.0 + upper_index))


def singular_strain_on_grid(grid: StructuredGrid) -> np.ndarray:
    s = sample(singular_field(grid.n), grid.node_coords())
    return s.sym_grad.reshape(grid.num_nodes, -1)


def nikolskii_bound_ratio(values, sf: StressField, region: BallRegion, alpha: float) -> float:
    """``|U|_{N^alpha_1} / (|A(U)|^2_{W^{1,2}} + 1)``; reported, never asserted."""
    nik = nikolskii_seminorm(values, sf.grid, alpha, region)
    norms = ball_norms(sf, region)
    w12 = norms.l2 ** 2 + norms.grad_l2 ** 2
    return nik.norm / (w12 + 1)


# --- Korn / Poincare -------------------------------------------------------

@dataclass
class RatioStats:
    korn: np.ndarray
    poincare: np.ndarray
    ibp_defect: np.ndarray

    @property
    def korn_max(self) -> float:
        return float(self.korn.max())

    @property
    def poincare_max(self) -> float:
        return float(self.poincare.max())


def _integrals(d: Discretization, values, law):
    g = d.grad_at_quad(values)
    e = 0.5 * (g + np.swapaxes(g, -1, -2))
    u = d.values_at_quad(values)
    B = lambda t: np.einsum("q,cq->", d.w, young_B_panels(law, t))
    div = np.einsum("cqkk->cq", g)
    ibp = (np.einsum("q,cqij,cqij->", d.w, e, e)
           - 0.5 * np.einsum("q,cqij,cqij->", d.w, g, g)
           - 0.5 * np.einsum("q,cq,cq->", d.w, div, div))
    return B(frob(g)), B(frob(e)), B(np.linalg.norm(u, axis=-1)), ibp


def korn_poincare_ratios(grid: StructuredGrid, law: NonlinearityLaw, count: int,
                         rng: np.random.Generator, fields=None) -> RatioStats:
    """Empirical Korn and Poincare ratios of zero-boundary Q1 fields.

    Random fields have i.i.d. uniform[-1, 1] interior nodal values; pass
    ``fields`` (arrays of nodal values) to use specific ones instead.
    """
    d = Discretization(grid, 3)
    mask = grid.boundary_mask()
    if fields is None:
        fields = []
        for _ in range(count):
            v = rng.uniform(-1, 1, (grid.num_nodes, grid.n))
            v[mask] = 0.0
            fields.append(v)
    korn, poin, ibp = [], [], []
    for v in fields:
        if np.any(v[mask] != 0):
            raise DomainError("fields must vanish on the boundary")
        Bg, Be, Bu, defect = _integrals(d, v, law)
        korn.append(Bg / Be)
        poin.append(Bu / Bg)
        ibp.append(defect)
    return RatioStats(np.array(korn), np.array(poin), np.array(ibp))


def bubble_gradient_field(grid: StructuredGrid) -> np.ndarray:
    """Nodal values of ``grad phi`` for the squared bubble ``phi = prod (x_d (1 - x_d))^2``
    rescaled to the grid box; vanishes on the boundary."""
    X = grid.node_coords()
    lo = np.array(grid.lower)
    hi = np.array(grid.upper)
    y = (X - lo) / (hi - lo)
    b = (y * (1 - y)) ** 2
    db = 2 * y * (1 - y) * (1 - 2 * y) / (hi - lo)
    out = np.empty_like(X)
    for i in range(grid.n):
        others = np.prod(np.delete(b, i, axis=1), axis=1)
        out[:, i] = db[:, i] * others
    return out


# --- experiments built on the solver ---------------------------------------

SMOOTH_FIELD = PolyVectorField([{(2, 1): 1.0, (0, 1): 1.0, (1, 0): 0.5},
                                {(1, 2): -1.0, (2, 0): 0.5, (0, 0): 0.25}])


@dataclass
class EstimateSample:
    p: float
    cells: int
    h: float
    ratio: float
    lhs: float
    rhs: float
    grad_l2: float
    newton_iterations: int


def estimate_experiment(p: float, cells: int, config: SolverConfig | None = None,
                        exact: PolyVectorField = SMOOTH_FIELD,
                        center=(0.5, 0.5), radius: float = 0.2) -> EstimateSample:
    """Solve a manufactured problem on the unit square and measure the estimate ratio.

    The right-hand side is manufactured with the law at the final ``eps``,
    so the polynomial field is the exact solution of the last stage.
    """
    config = config or SolverConfig()
    grid = StructuredGrid.box(2, 0.0, 1.0, cells)
    law = NonlinearityLaw.regularized(p, config.eps_floor)
    f = manufactured_rhs(law, exact)
    problem = DirichletProblem(law.with_eps(config.eps_start), grid,
                               polynomial_boundary(exact), f)
    u, rep = continuation_solve(problem, config, initial_guess(problem))
    sf = stress_project(u, law)
    region = BallRegion(center, radius, grid)
    est = estimate_constant(sf, region, f)
    return EstimateSample(p, cells, float(grid.h[0]), est.ratio, est.lhs, est.rhs,
                          est.norms.grad_l2, rep.total_iterations)


def ball_gradient_monitor(center, radius: float):
    """Monitor for ``continuation_solve``: ``|grad A|_{L2(B_R)}`` of the projected stress."""

    def monitor(u: DiscreteVectorField, law: NonlinearityLaw) -> float:
        region = BallRegion(center, radius, u.grid)
        return ball_norms(stress_project(u, law), region).grad_l2

    return monitor


def solve_singular(p: float, cells: int, config: SolverConfig | None = None,
                   extent: float = 1.0, monitor=None):
    """Continuation solve with the singular example as Dirichlet datum and ``f = 0``."""
    config = config or SolverConfig()
    grid = StructuredGrid.box(2, -extent, extent, cells)
    field = singular_field(2)
    problem = DirichletProblem(NonlinearityLaw.regularized(p, config.eps_start), grid,
                               polynomial_boundary(field), None)
    return continuation_solve(problem, config, initial_guess(problem, "zero"), monitor)


__all__ = [
    "BallNorms", "BallRegion", "EstimateRatio", "EstimateSample", "NikolskiiResult",
    "RatioStats", "StressField", "ThresholdTrajectory", "ball_gradient_monitor", "ball_norms",
    "bubble_gradient_field", "estimate_constant", "estimate_experiment",
    "singular_gradient_integral", "singular_gradient_integral_exact",
    "singular_strain_on_grid", "singular_threshold", "korn_poincare_ratios",
    "nikolskii_bound_ratio", "nikolskii_alpha", "nikolskii_seminorm", "solve_singular",
    "stress_at_quad", "stress_project",
]
