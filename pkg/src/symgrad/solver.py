"""Regularized symmetric-gradient Dirichlet problems on boxes.

Conforming multilinear (Q1) vector elements on a uniform structured grid.
The discrete problem is the minimization of

    E(u) = sum over cells of  int B(|eps u|) - f . u

over fields matching the Dirichlet datum on the boundary nodes.  Newton's
method uses the exact Jacobian of the stress map and a backtracking line
search on ``E``; ``continuation_solve`` drives ``eps`` down geometrically
with warm starts.
"""
from __future__ import annotations

import itertools
import logging
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ConvergenceError, DomainError, LinearSolverError
from .orlicz import (LawKind, NonlinearityLaw, eval_a, eval_a_prime, frob, stress,
                     young_B_panels)
from .tensorfields import PolyVectorField, grad_stress, sample

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class StructuredGrid:
    lower: tuple
    upper: tuple
    cells: tuple

    def __post_init__(self):
        if not (len(self.lower) == len(self.upper) == len(self.cells)):
            raise DomainError("lower, upper and cells must have the same length")
        if self.n not in (2, 3):
            raise DomainError(f"grids are supported in 2 or 3 dimensions, got {self.n}")
        if any(c < 1 for c in self.cells) or any(u <= l for l, u in zip(self.lower, self.upper)):
            raise DomainError("need at least one cell per axis and positive extents")
        object.__setattr__(self, "lower", tuple(float(v) for v in self.lower))
        object.__setattr__(self, "upper", tuple(float(v) for v in self.upper))
        object.__setattr__(self, "cells", tuple(int(v) for v in self.cells))

    @classmethod
    def box(cls, n: int, lower: float, upper: float, cells: int) -> "StructuredGrid":
        return cls((lower,) * n, (upper,) * n, (cells,) * n)

    @property
    def n(self) -> int:
        return len(self.cells)

    @property
    def h(self) -> np.ndarray:
        return (np.array(self.upper) - np.array(self.lower)) / np.array(self.cells)

    @property
    def node_shape(self) -> tuple:
        return tuple(c + 1 for c in self.cells)

    @property
    def num_nodes(self) -> int:
        return int(np.prod(self.node_shape))

    @property
    def num_cells(self) -> int:
        return int(np.prod(self.cells))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.h))

    def node_coords(self) -> np.ndarray:
        axes = [np.linspace(l, u, c + 1) for l, u, c in zip(self.lower, self.upper, self.cells)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def boundary_mask(self) -> np.ndarray:
        idx = np.indices(self.node_shape).reshape(self.n, -1)
        on = np.zeros(self.num_nodes, dtype=bool)
        for d, c in enumerate(self.cells):
            on |= (idx[d] == 0) | (idx[d] == c)
        return on

    def cell_origins(self) -> np.ndarray:
        idx = np.indices(self.cells).reshape(self.n, -1).T
        return np.array(self.lower) + idx * self.h

    def cell_nodes(self) -> np.ndarray:
        """Global node indices of each cell, local order from ``local_corners``."""
        base = np.indices(self.cells).reshape(self.n, -1).T
        corners = local_corners(self.n)
        nodes = base[:, None, :] + corners[None, :, :]
        return np.ravel_multi_index(tuple(nodes[..., d] for d in range(self.n)), self.node_shape)


def local_corners(n: int) -> np.ndarray:
    return np.array(list(itertools.product((0, 1), repeat=n)), dtype=np.int64)


@dataclass(frozen=True)
class ReferenceElement:
    """Q1 shape functions at tensor Gauss points of the unit cell."""

    points: np.ndarray      # (Q, n) in [0, 1]^n
    weights: np.ndarray     # (Q,), sum to 1
    N: np.ndarray           # (Q, L)
    dN: np.ndarray          # (Q, L, n), reference derivatives

    @classmethod
    def build(cls, n: int, order: int) -> "ReferenceElement":
        x, w = np.polynomial.legendre.leggauss(order)
        x = 0.5 * (x + 1)
        w = 0.5 * w
        pts = np.array(list(itertools.product(x, repeat=n)))
        wts = np.prod(np.array(list(itertools.product(w, repeat=n))), axis=1)
        corners = local_corners(n)
        # 1-d factors: corner bit 0 -> 1 - x, bit 1 -> x
        f = np.where(corners[None, :, :] == 1, pts[:, None, :], 1 - pts[:, None, :])
        df = np.where(corners[None, :, :] == 1, 1.0, -1.0) * np.ones_like(f)
        N = np.prod(f, axis=2)
        dN = np.empty(f.shape)
        for d in range(n):
            g = f.copy()
            g[..., d] = df[..., d]
            dN[..., d] = np.prod(g, axis=2)
        return cls(pts, wts, N, dN)


class Discretization:
    """Precomputed element data for one grid and quadrature order."""

    def __init__(self, grid: StructuredGrid, order: int = 3):
        self.grid = grid
        self.order = order
        n = grid.n
        self.ref = ReferenceElement.build(n, order)
        self.dN = self.ref.dN / grid.h                      # physical (Q, L, n)
        self.w = self.ref.weights * grid.cell_volume          # (Q,)
        self.cell_nodes = grid.cell_nodes()                   # (C, L)
        self.boundary = grid.boundary_mask()
        L = self.ref.N.shape[1]
        # sym-grad of the basis field N_a e_k, flattened local dof a*n + k
        B = np.zeros((len(self.w), L, n, n, n))
        for k in range(n):
            B[:, :, k, k, :] += 0.5 * self.dN
            B[:, :, k, :, k] += 0.5 * self.dN
        self.Bsym = B.reshape(len(self.w), L * n, n * n)       # (Q, L n, n n)
        dofs = (self.cell_nodes[:, :, None] * n + np.arange(n)).reshape(len(self.cell_nodes), -1)
        self.cell_dofs = dofs
        ndof = grid.num_nodes * n
        self.ndof = ndof
        fixed = np.repeat(self.boundary, n)
        self.free = np.flatnonzero(~fixed)
        self.fixed = np.flatnonzero(fixed)
        self._rows = np.repeat(dofs, dofs.shape[1], axis=1).ravel()
        self._cols = np.tile(dofs, (1, dofs.shape[1])).ravel()
        self._qpoints = None

    def quad_points(self) -> np.ndarray:
        if self._qpoints is None:
            self._qpoints = (self.grid.cell_origins()[:, None, :]
                             + self.ref.points[None, :, :] * self.grid.h)
        return self._qpoints

    def grad_at_quad(self, values: np.ndarray) -> np.ndarray:
        """``grad u[c, q, k, i]`` from nodal values ``(num_nodes, n)``."""
        U = values[self.cell_nodes]                                   # (C, L, n)
        return np.einsum("cak,qai->cqki", U, self.dN)

    def strain_at_quad(self, values):
        g = self.grad_at_quad(values)
        return 0.5 * (g + np.swapaxes(g, -1, -2))

    def values_at_quad(self, values):
        return np.einsum("cak,qa->cqk", values[self.cell_nodes], self.ref.N)

    def load(self, f_vals: np.ndarray) -> np.ndarray:
        """Global load vector from ``f`` sampled at quadrature points ``(C, Q, n)``."""
        loc = np.einsum("q,cqk,qa->cak", self.w, f_vals, self.ref.N)
        out = np.zeros(self.ndof)
        np.add.at(out, self.cell_dofs.ravel(), loc.reshape(-1))
        return out

    def assemble_vector(self, loc: np.ndarray) -> np.ndarray:
        out = np.zeros(self.ndof)
        np.add.at(out, self.cell_dofs.ravel(), loc.reshape(-1))
        return out

    def assemble_matrix(self, loc: np.ndarray) -> sp.csr_matrix:
        return sp.coo_matrix((loc.ravel(), (self._rows, self._cols)),
                             shape=(self.ndof, self.ndof)).tocsr()


@dataclass
class DiscreteVectorField:
    grid: StructuredGrid
    values: np.ndarray
    boundary: np.ndarray

    def copy(self) -> "DiscreteVectorField":
        return DiscreteVectorField(self.grid, self.values.copy(), self.boundary)

    @property
    def flat(self) -> np.ndarray:
        return self.values.reshape(-1)


def interpolate(grid: StructuredGrid, fn: Callable, interior: Callable | None = None
                ) -> DiscreteVectorField:
    """Nodal interpolant of ``fn``; if ``interior`` is given it fills non-boundary nodes."""
    X = grid.node_coords()
    vals = np.asarray(fn(X), dtype=float).reshape(grid.num_nodes, grid.n).copy()
    mask = grid.boundary_mask()
    if interior is not None:
        vals[~mask] = np.asarray(interior(X[~mask]), dtype=float).reshape(-1, grid.n)
    return DiscreteVectorField(grid, vals, mask)


def zero_field(n):
    return lambda X: np.zeros((len(X), n))


@dataclass
class DirichletProblem:
    law: NonlinearityLaw
    grid: StructuredGrid
    boundary: Callable = None
    rhs: Callable | None = None

    def __post_init__(self):
        if not self.law.regular_at_zero:
            raise DomainError(f"the solver needs a law regular at zero, got {self.law.describe()}")
        if self.boundary is None:
            self.boundary = zero_field(self.grid.n)

    def with_law(self, law: NonlinearityLaw) -> "DirichletProblem":
        return DirichletProblem(law, self.grid, self.boundary, self.rhs)


@dataclass
class SolverConfig:
    tol: float = 1e-9
    max_steps: int = 50
    contraction: float = 0.5
    sufficient_decrease: float = 1e-4
    max_backtracks: int = 40
    quad_order: int = 3
    eps_start: float = 1e-1
    eps_factor: float = 0.5
    eps_floor: float = 1e-5

    def __post_init__(self):
        if self.tol <= 0 or self.eps_floor <= 0:
            raise DomainError("tolerance and eps floor must be positive")
        if not 0 < self.eps_factor < 1 or not 0 < self.contraction < 1:
            raise DomainError("eps factor and line-search contraction must lie in (0, 1)")

    def eps_schedule(self) -> list[float]:
        out = []
        e = self.eps_start
        while e > self.eps_floor * (1 + 1e-12):
            out.append(e)
            e *= self.eps_factor
        out.append(self.eps_floor)
        return out


@dataclass
class SolveReport:
    law: str
    iterations: int = 0
    residual_history: list = field(default_factory=list)
    energy_history: list = field(default_factory=list)
    step_lengths: list = field(default_factory=list)
    converged: bool = False
    seconds: float = 0.0

    @property
    def final_energy(self) -> float:
        return self.energy_history[-1] if self.energy_history else float("nan")

    @property
    def final_residual(self) -> float:
        return self.residual_history[-1] if self.residual_history else float("nan")


class FEModel:
    """Energy, residual and Jacobian of one problem on its discretization."""

    def __init__(self, problem: DirichletProblem, order: int = 3, disc: Discretization | None = None):
        self.problem = problem
        self.disc = disc if disc is not None and disc.order == order else Discretization(problem.grid, order)
        d = self.disc
        n = problem.grid.n
        if problem.rhs is None:
            self.f_quad = np.zeros((d.grid.num_cells, len(d.w), n))
        else:
            X = d.quad_points()
            self.f_quad = np.asarray(problem.rhs(X.reshape(-1, n))).reshape(X.shape)
        self.load = d.load(self.f_quad)

    @property
    def law(self):
        return self.problem.law

    def energy(self, u: DiscreteVectorField) -> float:
        d = self.disc
        eps = d.strain_at_quad(u.values)
        B = young_B_panels(self.law, frob(eps))
        return float(np.einsum("q,cq->", d.w, B) - self.load @ u.flat)

    def full_residual(self, u: DiscreteVectorField) -> np.ndarray:
        d = self.disc
        S = stress(self.law, d.strain_at_quad(u.values))
        n = d.grid.n
        loc = np.einsum("q,cqm,qam->ca", d.w, S.reshape(S.shape[:2] + (n * n,)), d.Bsym)
        return d.assemble_vector(loc) - self.load

    def residual(self, u: DiscreteVectorField) -> np.ndarray:
        return self.full_residual(u)[self.disc.free]

    def jacobian(self, u: DiscreteVectorField) -> sp.csr_matrix:
        d = self.disc
        n = d.grid.n
        xi = d.strain_at_quad(u.values)
        r = frob(xi)
        nz = r > 0
        a = np.empty_like(r)
        c = np.zeros_like(r)
        a[nz] = eval_a(self.law, r[nz])
        if np.any(~nz):
            # zero-strain branch: derivative of the stress is a(0) Id
            a[~nz] = eval_a(self.law, np.zeros(1))[0]
        c[nz] = eval_a_prime(self.law, r[nz]) / r[nz]
        BB = np.einsum("qam,qbm->qab", d.Bsym, d.Bsym)
        loc = np.einsum("q,cq,qab->cab", d.w, a, BB)
        v = np.einsum("qam,cqm->cqa", d.Bsym, xi.reshape(xi.shape[:2] + (n * n,)))
        loc += np.einsum("q,cq,cqa,cqb->cab", d.w, c, v, v)
        K = d.assemble_matrix(loc)
        return K[d.free][:, d.free]

    def with_interior(self, u: DiscreteVectorField, x: np.ndarray) -> DiscreteVectorField:
        out = u.copy()
        flat = out.values.reshape(-1)
        flat[self.disc.free] = x
        return out


def energy(problem: DirichletProblem, u: DiscreteVectorField, order: int = 3) -> float:
    return FEModel(problem, order).energy(u)


def residual(problem: DirichletProblem, u: DiscreteVectorField, order: int = 3) -> np.ndarray:
    return FEModel(problem, order).residual(u)


def initial_guess(problem: DirichletProblem, interior: str = "lift") -> DiscreteVectorField:
    """Boundary datum at boundary nodes; interior from the datum (``lift``) or zero."""
    n = problem.grid.n
    inner = None if interior == "lift" else zero_field(n)
    return interpolate(problem.grid, problem.boundary, inner)


def _solve_linear(K, rhs):
    try:
        lu = spla.splu(K.tocsc())
    except RuntimeError as exc:
        raise LinearSolverError(f"linearized system is singular: {exc}") from exc
    x = lu.solve(rhs)
    if not np.all(np.isfinite(x)):
        raise LinearSolverError("linear solve produced non-finite values")
    return x


def newton_solve(problem: DirichletProblem, config: SolverConfig | None = None,
                 initial: DiscreteVectorField | None = None, model: FEModel | None = None):
    """Minimize the discrete energy; returns ``(u_h, SolveReport)``."""
    config = config or SolverConfig()
    model = model or FEModel(problem, config.quad_order)
    u = initial.copy() if initial is not None else initial_guess(problem)
    mask = problem.grid.boundary_mask()
    bvals = np.asarray(problem.boundary(problem.grid.node_coords()[mask])).reshape(-1, problem.grid.n)
    if not np.allclose(u.values[mask], bvals, rtol=0, atol=1e-12):
        raise DomainError("initial iterate does not match the boundary datum")
    report = SolveReport(problem.law.describe())
    t0 = time.perf_counter()
    x = u.flat[model.disc.free].copy()
    E = model.energy(u)
    R = model.residual(u)
    report.energy_history.append(E)
    report.residual_history.append(float(np.linalg.norm(R)))
    while report.residual_history[-1] >= config.tol:
        if report.iterations >= config.max_steps:
            report.seconds = time.perf_counter() - t0
            raise ConvergenceError(
                f"Newton did not converge in {config.max_steps} steps "
                f"(residual {report.residual_history[-1]:.3e})", iterate=u, report=report)
        K = model.jacobian(u)
        d = _solve_linear(K, -R)
        slope = float(R @ d)
        step = 1.0
        if slope >= 0:
            raise LinearSolverError("Newton direction is not a descent direction")
        if abs(slope) < 1e-13 * max(1.0, abs(E)):
            # quadratic regime: energy differences are below round-off
            trial = model.with_interior(u, x + d)
            E_new = model.energy(trial)
        else:
            for _ in range(config.max_backtracks):
                trial = model.with_interior(u, x + step * d)
                E_new = model.energy(trial)
                if E_new <= E + config.sufficient_decrease * step * slope:
                    break
                step *= config.contraction
            else:
                report.seconds = time.perf_counter() - t0
                raise ConvergenceError("line search failed to decrease the energy",
                                       iterate=u, report=report)
        u, x, E = trial, x + step * d, E_new
        R = model.residual(u)
        report.iterations += 1
        report.step_lengths.append(step)
        report.energy_history.append(E)
        report.residual_history.append(float(np.linalg.norm(R)))
        log.debug("newton %d: |R|=%.3e E=%.12g step=%g", report.iterations,
                  report.residual_history[-1], E, step)
    report.converged = True
    report.seconds = time.perf_counter() - t0
    return u, report


@dataclass
class ContinuationReport:
    stages: list = field(default_factory=list)          # (eps, SolveReport)
    monitor: list = field(default_factory=list)         # (eps, value)

    @property
    def total_iterations(self) -> int:
        return sum(r.iterations for _, r in self.stages)


def continuation_solve(problem: DirichletProblem, config: SolverConfig | None = None,
                       initial: DiscreteVectorField | None = None,
                       monitor: Callable | None = None):
    """Solve along the ``eps`` schedule of ``config`` with warm starts.

    ``monitor(u_h, law)`` is evaluated after every stage and recorded, e.g.
    a stress norm on an interior ball.
    """
    config = config or SolverConfig()
    if problem.law.kind is not LawKind.REGULARIZED:
        raise DomainError("continuation runs over the regularized family")
    disc = Discretization(problem.grid, config.quad_order)
    u = initial
    out = ContinuationReport()
    for eps in config.eps_schedule():
        stage = problem.with_law(problem.law.with_eps(eps))
        model = FEModel(stage, config.quad_order, disc)
        u, rep = newton_solve(stage, config, u, model)
        out.stages.append((eps, rep))
        if monitor is not None:
            out.monitor.append((eps, float(monitor(u, stage.law))))
    return u, out


def manufactured_rhs(law: NonlinearityLaw, exact: PolyVectorField) -> Callable:
    """``f = -div A(eps u_exact)``, expanded by the chain rule on exact derivatives."""

    def f(X):
        X = np.asarray(X, dtype=float)
        s = sample(exact, X.reshape(-1, exact.n))
        G = grad_stress(law, s)                    # [.., j, k, l] = d_j A_kl
        return -np.einsum("...jkj->...k", G).reshape(X.shape)

    return f


def polynomial_boundary(exact: PolyVectorField) -> Callable:
    return lambda X: exact(np.asarray(X, dtype=float).reshape(-1, exact.n))


def l2_error(u: DiscreteVectorField, exact: Callable, order: int = 5) -> float:
    d = Discretization(u.grid, order)
    X = d.quad_points()
    diff = d.values_at_quad(u.values) - np.asarray(exact(X.reshape(-1, u.grid.n))).reshape(X.shape)
    return float(np.sqrt(np.einsum("q,cqk,cqk->", d.w, diff, diff)))


def nodal_max_error(u: DiscreteVectorField, exact: Callable) -> float:
    X = u.grid.node_coords()
    return float(np.max(np.abs(u.values - np.asarray(exact(X)).reshape(u.values.shape))))


def convergence_rates(hs, errors) -> np.ndarray:
    hs = np.asarray(hs, dtype=float)
    errors = np.asarray(errors, dtype=float)
    return np.log(errors[1:] / errors[:-1]) / np.log(hs[1:] / hs[:-1])
