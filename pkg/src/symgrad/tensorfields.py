"""Exact calculus on polynomial vector fields.

Polynomials are stored as a monomial exponent table shared by a whole
array of outputs (``PolyArray``), so evaluating every derivative block of
a field at many points is a single matrix product.  Coefficients may be
floats or ``fractions.Fraction`` (object arrays); differentiation only
multiplies by integer exponents, so it is exact in either case.

Index conventions for a sample of ``u: R^n -> R^n``:

* ``grad[k, i] = d_i u_k``
* ``hessian[i, j, k] = d_i d_j u_k``
* ``grad_sym_grad[i, j, k] = d_i (eps u)_jk``
* ``third[i, j, l, k] = d_i d_j d_l u_k``
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import DomainError
from .orlicz import NonlinearityLaw, eval_a, eval_a_prime, frob

MAX_DIM = 8


class PolyArray:
    """An array of multivariate polynomials sharing one monomial table.

    ``exps`` has shape ``(M, n)``; ``coefs`` has shape ``(M, *shape)``.
    """

    def __init__(self, exps, coefs):
        self.exps = np.asarray(exps, dtype=np.int64).reshape(-1, np.shape(exps)[-1])
        self.coefs = np.asarray(coefs)
        if self.coefs.shape[0] != self.exps.shape[0]:
            raise ValueError("one coefficient row per monomial required")

    @property
    def nvars(self) -> int:
        return self.exps.shape[1]

    @property
    def shape(self) -> tuple:
        return self.coefs.shape[1:]

    def diff(self, i: int) -> "PolyArray":
        e = self.exps[:, i]
        keep = e > 0
        exps = self.exps[keep].copy()
        exps[:, i] -= 1
        factor = e[keep].reshape((-1,) + (1,) * len(self.shape))
        if self.coefs.dtype == object:
            factor = factor.astype(object)
        coefs = self.coefs[keep] * factor
        if not keep.any():
            exps = np.zeros((1, self.nvars), dtype=np.int64)
            coefs = np.zeros((1,) + self.shape, dtype=self.coefs.dtype)
        return PolyArray(exps, coefs)

    def gradient(self) -> "PolyArray":
        """Stack ``d_i`` along a new trailing axis."""
        parts = [self.diff(i) for i in range(self.nvars)]
        exps = np.unique(np.vstack([p.exps for p in parts]), axis=0)
        lookup = {tuple(e): r for r, e in enumerate(exps)}
        coefs = np.zeros((len(exps),) + self.shape + (self.nvars,), dtype=self.coefs.dtype)
        if coefs.dtype == object:
            coefs[...] = 0
        for i, part in enumerate(parts):
            rows = [lookup[tuple(e)] for e in part.exps]
            np.add.at(coefs[..., i], rows, part.coefs)
        return PolyArray(exps, coefs)

    def __call__(self, x):
        """Evaluate at one point ``(n,)`` or a batch ``(P, n)``."""
        x = np.asarray(x)
        single = x.ndim == 1
        pts = x.reshape(-1, self.nvars)
        if pts.dtype == object or self.coefs.dtype == object:
            mono = np.array([[_monomial(row, e) for e in self.exps] for row in pts], dtype=object)
        else:
            mono = np.prod(pts[:, None, :].astype(float) ** self.exps[None, :, :], axis=2)
        out = np.tensordot(mono, self.coefs, axes=(1, 0))
        return out[0] if single else out


def _monomial(x, e):
    v = 1
    for xi, ei in zip(x, e):
        v = v * xi ** int(ei)
    return v


class PolyVectorField:
    """A polynomial field ``u: R^n -> R^n`` with derivatives up to order three."""

    def __init__(self, components):
        """``components`` is a list of ``n`` dicts mapping exponent tuples to coefficients."""
        n = len(components)
        if not 1 <= n <= MAX_DIM:
            raise DomainError(f"dimension must be in 1..{MAX_DIM}, got {n}")
        keys = sorted({tuple(int(v) for v in k) for comp in components for k in comp})
        if not keys:
            keys = [(0,) * n]
        if any(len(k) != n for k in keys):
            raise DomainError("every exponent tuple must have length n")
        exact = any(isinstance(c, Fraction) for comp in components for c in comp.values())
        dtype = object if exact else float
        coefs = np.zeros((len(keys), n), dtype=dtype)
        if exact:
            coefs[...] = Fraction(0)
        row = {k: r for r, k in enumerate(keys)}
        for comp_index, comp in enumerate(components):
            for k, c in comp.items():
                coefs[row[tuple(int(v) for v in k)], comp_index] += c if exact else float(c)
        self.n = n
        self.u = PolyArray(np.array(keys), coefs)
        self.du = self.u.gradient()           # [k, i]
        self.d2u = self.du.gradient()         # [k, i, j]
        self.d3u = self.d2u.gradient()        # [k, i, j, l]

    @property
    def degree(self) -> int:
        live = np.any(self.u.coefs != 0, axis=1)
        return int(self.u.exps[live].sum(axis=1).max()) if live.any() else 0

    def __call__(self, x):
        return self.u(x)

    def __add__(self, other: "PolyVectorField") -> "PolyVectorField":
        return PolyVectorField([_merge(a, b, 1) for a, b in zip(self.as_dicts(), other.as_dicts())])

    def scale(self, lam) -> "PolyVectorField":
        return PolyVectorField([{k: lam * c for k, c in d.items()} for d in self.as_dicts()])

    def as_dicts(self) -> list[dict]:
        out = [dict() for _ in range(self.n)]
        for e, row in zip(self.u.exps, self.u.coefs):
            for k in range(self.n):
                if row[k] != 0:
                    out[k][tuple(int(v) for v in e)] = row[k]
        return out


def _merge(a: dict, b: dict, sign) -> dict:
    out = dict(a)
    for k, c in b.items():
        out[k] = out.get(k, 0) + sign * c
    return out


@dataclass
class TensorSample:
    """Derivative blocks of a field at one point, or at a batch of points.

    Array fields carry an optional leading batch axis.
    """

    x: np.ndarray
    grad: np.ndarray
    sym_grad: np.ndarray
    hessian: np.ndarray
    grad_sym_grad: np.ndarray
    laplacian: np.ndarray
    div: np.ndarray
    grad_div: np.ndarray
    third: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.grad.shape[-1]

    def take(self, idx) -> "TensorSample":
        return TensorSample(**{k: (None if v is None else v[idx]) for k, v in vars(self).items()})


def _blocks(grad, hessian, third, x):
    half = Fraction(1, 2) if np.asarray(grad).dtype == object else 0.5
    sym = half * (grad + np.swapaxes(grad, -1, -2))
    # hessian[i, j, k] = d_i d_j u_k ; d_i eps_jk = (d_i d_k u_j + d_i d_j u_k) / 2
    gsg = half * (hessian + np.swapaxes(hessian, -1, -2))
    lap = np.einsum("...iik->...k", hessian)
    div = np.einsum("...kk->...", grad)
    grad_div = np.einsum("...jkk->...j", hessian)
    return TensorSample(x, grad, sym, hessian, gsg, lap, div, grad_div, third)


def sample(field: PolyVectorField, x) -> TensorSample:
    """Evaluate every derivative block exactly at ``x`` (one point or a batch)."""
    x = np.asarray(x)
    grad = field.du(x)                                        # [..., k, i]
    d2 = field.d2u(x)                                         # [..., k, i, j]
    d3 = field.d3u(x)                                         # [..., k, i, j, l]
    hessian = np.moveaxis(d2, -3, -1)                         # [..., i, j, k]
    third = np.moveaxis(d3, -4, -1)                           # [..., i, j, l, k]
    return _blocks(grad, hessian, third, x)


def sample_from_derivatives(grad, hessian, third=None, x=None) -> TensorSample:
    """Build a sample from raw derivative data (first two hessian slots symmetric)."""
    grad = np.asarray(grad, dtype=float)
    hessian = np.asarray(hessian, dtype=float)
    if not np.allclose(hessian, np.swapaxes(hessian, -3, -2)):
        raise DomainError("hessian must be symmetric in its first two slots")
    return _blocks(grad, hessian, third, x)


def sym_laplacian(s: TensorSample):
    """``div(eps u)``, row-wise: component ``j`` is ``sum_i d_i eps_ij``."""
    return np.einsum("...iij->...j", s.grad_sym_grad)


def sym_laplacian_alt(s: TensorSample):
    """The same quantity as ``(lap u + grad div u) / 2``."""
    return 0.5 * s.laplacian + 0.5 * s.grad_div


def hessian_from_sym(s: TensorSample):
    """Rebuild ``d_i d_j u_k`` from ``grad(eps u)`` alone."""
    g = s.grad_sym_grad
    return g + np.swapaxes(g, -3, -2) - np.moveaxis(g, -3, -1)


def grad_norm_sym(s: TensorSample):
    """``grad |eps u|`` where ``eps u != 0``; zero elsewhere.

    Computed slot-wise as ``(eps u : d_i eps u) / |eps u|``.
    """
    r = frob(s.sym_grad)
    num = np.einsum("...jk,...ijk->...i", s.sym_grad, s.grad_sym_grad)
    safe = np.where(r > 0, r, 1.0)
    return np.where((r > 0)[..., None], num / safe[..., None], 0.0)


def grad_stress(law: NonlinearityLaw, s: TensorSample):
    """``d_i A(eps u)_jk`` by the chain rule."""
    r = frob(s.sym_grad)
    zero = r == 0
    if np.any(zero) and not law.regular_at_zero:
        raise DomainError(f"{law.describe()} is singular where eps u = 0")
    a = _a_safe(law, r)
    ap = np.where(zero, 0.0, _ap_safe(law, r))
    dr = grad_norm_sym(s)
    return (a[..., None, None, None] * s.grad_sym_grad
            + (ap[..., None] * dr)[..., :, None, None] * s.sym_grad[..., None, :, :])


def _a_safe(law, r):
    r = np.asarray(r, dtype=float)
    out = np.empty_like(r)
    nz = r > 0
    out[nz] = eval_a(law, r[nz])
    if np.any(~nz):
        out[~nz] = eval_a(law, np.zeros(1))[0]
    return out


def _ap_safe(law, r):
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    nz = r > 0
    out[nz] = eval_a_prime(law, r[nz])
    return out


@dataclass(frozen=True)
class StressGradientResult:
    ratio_sym: float
    ratio_full: float
    lower: float
    upper: float

    @property
    def within_bounds(self) -> bool:
        slack = 1e-12 * max(1.0, abs(self.ratio_sym))
        return self.lower - slack <= self.ratio_sym <= self.upper + slack


def check_stress_gradient(law: NonlinearityLaw, s: TensorSample) -> StressGradientResult:
    """Compare ``|grad A(eps u)|`` with ``a(|eps u|)`` times the strain gradients.

    The first ratio must sit in ``[1 + i_a, 1 + s_a]``; the bounds come from
    the law's index interval.
    """
    r = float(frob(s.sym_grad))
    if r == 0 and not law.regular_at_zero:
        raise DomainError(f"{law.describe()} is singular where eps u = 0")
    ga = float(np.linalg.norm(np.ravel(grad_stress(law, s))))
    a = float(_a_safe(law, np.array(r)))
    g_sym = float(np.linalg.norm(np.ravel(s.grad_sym_grad)))
    g_full = float(np.linalg.norm(np.ravel(s.hessian)))
    lo, hi = law.index_bounds()
    return StressGradientResult(ga / (a * g_sym), ga / (a * g_full), 1 + lo, 1 + hi)


def _div_W(s: TensorSample):
    """``div((lap u)^T eps u - grad |eps u|^2 / 2)`` from exact derivatives."""
    if s.third is None:
        raise DomainError("third derivatives are required")
    T = s.third
    grad_lap = np.einsum("...jllk->...jk", T)                       # d_j lap u_k
    # d_j d_j eps_ab summed over j
    lap_eps = 0.5 * (np.einsum("...jjba->...ab", T) + np.einsum("...jjab->...ab", T))
    term1 = np.einsum("...jk,...kj->...", grad_lap, s.sym_grad)
    term2 = np.einsum("...k,...jkj->...", s.laplacian, s.grad_sym_grad)
    term3 = np.einsum("...jab,...jab->...", s.grad_sym_grad, s.grad_sym_grad)
    term4 = np.einsum("...ab,...ab->...", s.sym_grad, lap_eps)
    return term1 + term2 - term3 - term4


def W_field(s: TensorSample):
    """The vector ``(lap u)^T eps u - grad |eps u|^2 / 2`` at the sample."""
    return (np.einsum("...k,...kj->...j", s.laplacian, s.sym_grad)
            - np.einsum("...ab,...jab->...j", s.sym_grad, s.grad_sym_grad))


@dataclass(frozen=True)
class StrainLaplacianTerms:
    lhs: float
    grad_sym_sq: float
    div_term: float

    @property
    def residual(self) -> float:
        return abs(self.lhs - self.grad_sym_sq - self.div_term)

    @property
    def relative_residual(self) -> float:
        rhs = self.grad_sym_sq + self.div_term
        return self.residual / (1 + abs(self.lhs) + abs(rhs))


def strain_laplacian_terms(s: TensorSample) -> StrainLaplacianTerms:
    lhs = np.einsum("...j,...j->...", sym_laplacian(s), s.laplacian)
    gs = np.einsum("...ijk,...ijk->...", s.grad_sym_grad, s.grad_sym_grad)
    return StrainLaplacianTerms(lhs, gs, _div_W(s))


def check_strain_laplacian(s: TensorSample):
    """Relative residual of the ``div(eps u) . lap u`` identity (array for batches)."""
    return strain_laplacian_terms(s).relative_residual


def random_field(n: int, degree: int, rng: np.random.Generator) -> PolyVectorField:
    """I.i.d. uniform[-1, 1] coefficients on every monomial of total degree <= ``degree``."""
    if not 1 <= n <= MAX_DIM:
        raise DomainError(f"dimension must be in 1..{MAX_DIM}")
    exps = [e for e in np.ndindex(*(degree + 1,) * n) if sum(e) <= degree]
    return PolyVectorField([{e: rng.uniform(-1, 1) for e in exps} for _ in range(n)])


def divergence_free_field(n: int, degree: int, rng: np.random.Generator) -> PolyVectorField:
    """A field with ``div u = 0``: ``u_i = sum_j d_j W_ij`` for a random antisymmetric ``W``."""
    exps = [e for e in np.ndindex(*(degree + 2,) * n) if sum(e) <= degree + 1]
    pot = {}
    for i in range(n):
        for j in range(i + 1, n):
            pot[i, j] = {e: rng.uniform(-1, 1) for e in exps}
    comps = [dict() for _ in range(n)]
    for (i, j), poly in pot.items():
        for e, c in poly.items():
            for target, src, sign in ((i, j, 1), (j, i, -1)):
                # u_target += sign * d_src W_ij
                if e[src] == 0:
                    continue
                e2 = list(e)
                e2[src] -= 1
                key = tuple(e2)
                comps[target][key] = comps[target].get(key, 0.0) + sign * c * e[src]
    return PolyVectorField(comps)


def singular_field(n: int = 2, exact: bool = False) -> PolyVectorField:
    """``u = (2 x1 x2, -x1^2, 0, ..., 0)``."""
    if n < 2:
        raise DomainError("the example needs n >= 2")
    one = Fraction(1) if exact else 1.0
    e = lambda *idx: tuple(idx) + (0,) * (n - len(idx))
    comps = [{e(1, 1): 2 * one}, {e(2, 0): -one}] + [dict() for _ in range(n - 2)]
    return PolyVectorField(comps)


def affine_field(M, c) -> PolyVectorField:
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    comps = []
    for k in range(n):
        d = {(0,) * n: float(c[k])}
        for i in range(n):
            e = [0] * n
            e[i] = 1
            d[tuple(e)] = M[k, i]
        comps.append(d)
    return PolyVectorField(comps)
