"""Pointwise identities and reduced inequalities for the symmetric-gradient operator.

The two identities expand ``2 a(|eps u|) div(A(eps u)) . lap u`` into a
quadratic bracket plus an exact divergence.  Both sides are evaluated from
exact polynomial derivatives, with every divergence and chain rule expanded
by hand, so the residual only measures floating-point round-off.

The reduced inequalities are the constant-free quadratic statements that
remain after Young's inequality; their constants are explicit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .orlicz import NonlinearityLaw, frob
from .tensorfields import (PolyVectorField, TensorSample, W_field, _a_safe, _ap_safe,
                           _div_W, grad_norm_sym, sample, sample_from_derivatives)

SQRT6 = math.sqrt(6.0)


# --- identities ------------------------------------------------------------

@dataclass
class IdentityReport:
    identity: str
    law: str
    field: str
    points: int
    max_relative_residual: float
    term_magnitudes: dict = field(default_factory=dict)


def _law_factors(law: NonlinearityLaw, s: TensorSample):
    r = frob(s.sym_grad)
    zero = r == 0
    if np.any(zero) and not law.regular_at_zero:
        raise DomainError(f"{law.describe()} is singular where eps u = 0")
    a = _a_safe(law, r)
    ap = _ap_safe(law, r)
    # theta-dependent terms vanish where eps u = 0
    theta = np.where(zero, 0.0, ap * np.where(zero, 1.0, r) / a)
    return r, a, ap, theta


def _div_stress_dot_lap(law, s, a, ap):
    """``div(A(eps u)) . lap u`` with ``(div M)_k = sum_j d_j M_kj``."""
    dr = grad_norm_sym(s)
    div_A = (a[..., None] * np.einsum("...jkj->...k", s.grad_sym_grad)
             + ap[..., None] * np.einsum("...j,...kj->...k", dr, s.sym_grad))
    return np.einsum("...k,...k->...", div_A, s.laplacian)


def _first_identity_parts(law: NonlinearityLaw, s: TensorSample):
    r, a, ap, theta = _law_factors(law, s)
    dr = grad_norm_sym(s)
    lhs = 2 * a * _div_stress_dot_lap(law, s, a, ap)
    gsq = np.einsum("...ijk,...ijk->...", s.grad_sym_grad, s.grad_sym_grad)
    lapsq = np.einsum("...k,...k->...", s.laplacian, s.laplacian)
    drsq = np.einsum("...i,...i->...", dr, dr)
    gd_lap = np.einsum("...k,...k->...", s.grad_div, s.laplacian)
    W = W_field(s)
    # div(a^2 W) = a^2 div W + 2 a a' grad|eps u| . W
    div_term = a * a * _div_W(s) + 2 * a * ap * np.einsum("...j,...j->...", dr, W)
    return dict(r=r, a=a, ap=ap, theta=theta, dr=dr, lhs=lhs, gsq=gsq, lapsq=lapsq,
                drsq=drsq, gd_lap=gd_lap, div_term=div_term)


def _rel(lhs, rhs):
    return np.abs(lhs - rhs) / (1 + np.abs(lhs) + np.abs(rhs))


def _prepare(law, field_or_sample, x):
    if isinstance(field_or_sample, TensorSample):
        return field_or_sample
    return sample(field_or_sample, np.asarray(x, dtype=float))


def identity_lowdim_terms(law: NonlinearityLaw, field_or_sample, x=None) -> dict:
    s = _prepare(law, field_or_sample, x)
    t = _first_identity_parts(law, s)
    a2 = t["a"] ** 2
    bracket = {
        "grad_sym_sq": t["gsq"],
        "half_lap_sq": 0.5 * t["lapsq"],
        "theta_term": 2 * t["theta"] * t["drsq"],
        "half_graddiv_lap": 0.5 * t["gd_lap"],
    }
    rhs = a2 * sum(bracket.values()) + t["div_term"]
    return dict(lhs=t["lhs"], rhs=rhs, div_term=t["div_term"],
                **{k: a2 * v for k, v in bracket.items()})


def identity_lowdim_residual(law: NonlinearityLaw, field_or_sample, x=None):
    """Relative residual ``|L - R| / (1 + |L| + |R|)`` of the first identity."""
    t = identity_lowdim_terms(law, field_or_sample, x)
    return _rel(t["lhs"], t["rhs"])


def identity_alldim_terms(law: NonlinearityLaw, field_or_sample, x=None) -> dict:
    s = _prepare(law, field_or_sample, x)
    t = _first_identity_parts(law, s)
    a, ap, theta, dr, r = t["a"], t["ap"], t["theta"], t["dr"], t["r"]
    a2 = a * a
    gdsq = np.einsum("...j,...j->...", s.grad_div, s.grad_div)
    diff = s.laplacian - s.grad_div
    safe_r = np.where(r > 0, r, 1.0)
    mixed = np.where(r > 0, theta * np.einsum("...j,...j->...", dr, diff) * s.div / safe_r, 0.0)
    bracket = {
        "grad_sym_sq": t["gsq"],
        "half_lap_sq": 0.5 * t["lapsq"],
        "half_graddiv_sq": 0.5 * gdsq,
        "theta_term": 2 * theta * t["drsq"],
        "theta_mixed": -mixed,
    }
    # extra divergence: div(a^2 V), V = div u (lap u - grad div u) / 2
    T = s.third
    d_lap = np.einsum("...jllj->...", T)                 # sum_j d_j lap u_j
    d_graddiv = np.einsum("...jjmm->...", T)            # lap div u
    div_V = 0.5 * (np.einsum("...j,...j->...", s.grad_div, diff) + s.div * (d_lap - d_graddiv))
    V = 0.5 * s.div[..., None] * diff
    extra = a2 * div_V + 2 * a * ap * np.einsum("...j,...j->...", dr, V)
    div_term = t["div_term"] + extra
    rhs = a2 * sum(bracket.values()) + div_term
    return dict(lhs=t["lhs"], rhs=rhs, div_term=div_term,
                **{k: a2 * v for k, v in bracket.items()})


def identity_alldim_residual(law: NonlinearityLaw, field_or_sample, x=None):
    t = identity_alldim_terms(law, field_or_sample, x)
    return _rel(t["lhs"], t["rhs"])


def identity_report(name: str, law: NonlinearityLaw, field: PolyVectorField, points,
                    field_label: str = "polynomial") -> IdentityReport:
    terms_fn = {"lowdim": identity_lowdim_terms, "alldim": identity_alldim_terms}[name]
    s = sample(field, np.atleast_2d(points))
    t = terms_fn(law, s)
    res = _rel(t["lhs"], t["rhs"])
    mags = {k: float(np.max(np.abs(v))) for k, v in t.items() if k not in ("lhs", "rhs")}
    return IdentityReport(name, law.describe(), field_label, len(res), float(np.max(res)), mags)


# --- reduced inequalities --------------------------------------------------

def lowdim_theta_floor(n: int) -> float:
    return -(8 - n) / 16


def alldim_theta_interval(n: int) -> tuple[float, float]:
    r = math.sqrt(n + 1)
    return -1 / (r + 1), 1 / (r - 1)


def _scale(*terms):
    return sum(np.abs(t) for t in terms)


def reduced_inequality_lowdim(s: TensorSample, theta: float, n: int | None = None,
                              with_scale: bool = False):
    """Slack of the low-dimensional reduced inequality.

    ``|G|^2 + |lap u|^2/2 + 2 theta |grad|eps u||^2 + grad div u . lap u / 2
    - c |G|^2`` with ``G = grad eps u`` and ``c = 1 - n/8 + 2 min(theta, 0)``.
    """
    n = s.n if n is None else n
    if not 2 <= n <= 7:
        raise DomainError(f"the low-dimensional form needs 2 <= n <= 7, got {n}")
    if theta < lowdim_theta_floor(n):
        raise DomainError(f"theta={theta} is below -(8-n)/16 for n={n}")
    dr = grad_norm_sym(s)
    gsq = np.einsum("...ijk,...ijk->...", s.grad_sym_grad, s.grad_sym_grad)
    lapsq = np.einsum("...k,...k->...", s.laplacian, s.laplacian)
    theta_term = 2 * theta * np.einsum("...i,...i->...", dr, dr)
    cross = 0.5 * np.einsum("...k,...k->...", s.grad_div, s.laplacian)
    c = 1 - n / 8 + 2 * min(theta, 0.0)
    slack = gsq + 0.5 * lapsq + theta_term + cross - c * gsq
    if with_scale:
        return slack, _scale(gsq, 0.5 * lapsq, theta_term, cross)
    return slack


def reduced_inequality_alldim(s: TensorSample, theta: float, n: int | None = None,
                              with_scale: bool = False):
    """Slack of the all-dimension reduced inequality, ``c = 1 + min(0, 2 theta - n theta^2)``."""
    n = s.n if n is None else n
    lo, hi = alldim_theta_interval(n)
    if not lo < theta < hi:
        raise DomainError(f"theta={theta} outside ({lo:.6g}, {hi:.6g}) for n={n}")
    r = frob(s.sym_grad)
    if np.any(r == 0):
        raise DomainError("the all-dimension form needs eps u != 0")
    dr = grad_norm_sym(s)
    gsq = np.einsum("...ijk,...ijk->...", s.grad_sym_grad, s.grad_sym_grad)
    lapsq = np.einsum("...k,...k->...", s.laplacian, s.laplacian)
    gdsq = np.einsum("...j,...j->...", s.grad_div, s.grad_div)
    theta_term = 2 * theta * np.einsum("...i,...i->...", dr, dr)
    mixed = theta * np.einsum("...j,...j->...", dr, s.grad_div - s.laplacian) * s.div / r
    c = 1 + min(0.0, 2 * theta - n * theta * theta)
    slack = gsq + 0.5 * lapsq + 0.5 * gdsq + theta_term + mixed - c * gsq
    if with_scale:
        return slack, _scale(gsq, 0.5 * lapsq, 0.5 * gdsq, theta_term, mixed)
    return slack


def random_derivative_samples(n: int, count: int, rng: np.random.Generator) -> TensorSample:
    """Samples drawn directly in derivative space.

    ``grad`` and the hessian (symmetric in its first two slots) have i.i.d.
    uniform[-1, 1] entries.
    """
    grad = rng.uniform(-1, 1, (count, n, n))
    h = rng.uniform(-1, 1, (count, n, n, n))
    h = 0.5 * (h + np.swapaxes(h, 1, 2))
    return sample_from_derivatives(grad, h)


@dataclass
class SlackSummary:
    n: int
    theta: float
    samples: int
    min_slack: float
    min_scaled_slack: float

    @property
    def holds(self) -> bool:
        return self.min_scaled_slack >= -1e-12


def sweep_reduced(kind: str, n: int, theta: float, count: int,
                  rng: np.random.Generator) -> SlackSummary:
    s = random_derivative_samples(n, count, rng)
    fn = {"lowdim": reduced_inequality_lowdim, "alldim": reduced_inequality_alldim}[kind]
    slack, scale = fn(s, theta, n, with_scale=True)
    scaled = slack / np.maximum(scale, 1e-300)
    return SlackSummary(n, theta, count, float(slack.min()), float(scaled.min()))


def lowdim_ratio_search(n: int, theta: float, count: int, rng: np.random.Generator) -> float:
    """Smallest observed ``bracket / |grad eps u|^2``; informational only.

    Meant for probing whether the constant of the low-dimensional form is
    attained, including for ``theta`` below its admissible floor.
    """
    s = random_derivative_samples(n, count, rng)
    dr = grad_norm_sym(s)
    gsq = np.einsum("...ijk,...ijk->...", s.grad_sym_grad, s.grad_sym_grad)
    lhs = (gsq + 0.5 * np.einsum("...k,...k->...", s.laplacian, s.laplacian)
           + 2 * theta * np.einsum("...i,...i->...", dr, dr)
           + 0.5 * np.einsum("...k,...k->...", s.grad_div, s.laplacian))
    return float(np.min(lhs / gsq))


# --- two-dimensional claim -------------------------------------------------

def q_matrix(s: float = SQRT6 - 2) -> np.ndarray:
    return np.array([[s + 2, 1.5, 0.5],
                     [1.5, s / 2 + 1, s / 2 + 0.5],
                     [0.5, s / 2 + 0.5, 1.5 * s]])


def q_matrix_spectrum() -> np.ndarray:
    return np.linalg.eigvalsh(q_matrix())


def q_null_vector() -> np.ndarray:
    _, vecs = np.linalg.eigh(q_matrix())
    return vecs[:, 0]


def claim_2d(s: TensorSample):
    """``(sqrt 6 - 2)|grad eps u|^2 + |lap u|^2 + grad div u . lap u``."""
    if s.n != 2:
        raise DomainError(f"the planar claim needs n = 2, got {s.n}")
    gsq = np.einsum("...ijk,...ijk->...", s.grad_sym_grad, s.grad_sym_grad)
    lapsq = np.einsum("...k,...k->...", s.laplacian, s.laplacian)
    return (SQRT6 - 2) * gsq + lapsq + np.einsum("...k,...k->...", s.grad_div, s.laplacian)


def second_derivative_coords(s: TensorSample):
    """``(alpha, beta, gamma)`` and ``(alpha', beta', gamma')`` of a planar sample."""
    H = s.hessian                                      # [i, j, k] = d_i d_j u_k
    first = np.stack([H[..., 0, 0, 0], H[..., 1, 1, 0], H[..., 0, 1, 1]], axis=-1)
    second = np.stack([H[..., 1, 1, 1], H[..., 0, 0, 1], H[..., 0, 1, 0]], axis=-1)
    return first, second


def claim_2d_quadratic(first, second):
    Q = q_matrix()
    return (np.einsum("...i,ij,...j->...", first, Q, first)
            + np.einsum("...i,ij,...j->...", second, Q, second))


def sample_from_coords(first, second) -> TensorSample:
    """Planar sample (zero gradient) whose second derivatives are the given coordinates."""
    first = np.asarray(first, dtype=float)
    second = np.asarray(second, dtype=float)
    batch = first.shape[:-1]
    H = np.zeros(batch + (2, 2, 2))
    al, be, ga = first[..., 0], first[..., 1], first[..., 2]
    al2, be2, ga2 = second[..., 0], second[..., 1], second[..., 2]
    H[..., 0, 0, 0] = al
    H[..., 1, 1, 0] = be
    H[..., 0, 1, 1] = H[..., 1, 0, 1] = ga
    H[..., 1, 1, 1] = al2
    H[..., 0, 0, 1] = be2
    H[..., 0, 1, 0] = H[..., 1, 0, 0] = ga2
    return sample_from_derivatives(np.zeros(batch + (2, 2)), H)


# --- admissible range ------------------------------------------------------

@dataclass(frozen=True)
class AdmissibleRange:
    """Exponent interval ``(p_minus, p_plus)`` in dimension ``n``.

    Between 3/2 and ``p_minus`` nothing is claimed either way.
    """

    n: int
    p_minus: float
    p_plus: float

    def contains(self, p: float) -> bool:
        return self.p_minus < p < self.p_plus


def admissible_range(n: int) -> AdmissibleRange:
    if n < 2:
        raise DomainError(f"dimension must be at least 2, got {n}")
    if n == 2:
        p_minus = 2 - 5 / (2 * (4 + SQRT6))
    else:
        p_minus = 2 - 1 / (math.sqrt(n + 1) + 1)
    p_plus = math.inf if n <= 7 else 2 + 1 / (math.sqrt(n + 1) - 1)
    return AdmissibleRange(n, p_minus, p_plus)

