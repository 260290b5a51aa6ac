"""Scalar nonlinearity laws and the Young functions built from them.

A law is a positive function ``a`` on ``(0, inf)``.  From it we build

* ``b(t) = t a(t)`` and the Young function ``B(t) = int_0^t b``,
* the conjugate ``B~(t) = int_0^t b^{-1}``,
* the matrix stress ``A(xi) = a(|xi|) xi`` and its derivative.

Three families are supported: the pure power ``t^(p-2)``, the rational
regularization pinched into ``[eps, 1/eps]`` and the Carreau law
``(nu + t^2)^((p-2)/2)``.  Every scalar function accepts numpy arrays.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize

from .errors import DomainError, QuadratureError


class LawKind(str, enum.Enum):
    PURE_POWER = "pure_power"
    REGULARIZED = "regularized"
    CARREAU = "carreau"


@dataclass(frozen=True)
class NonlinearityLaw:
    kind: LawKind
    p: float
    eps: float = 0.0
    nu: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", LawKind(self.kind))
        if not self.p > 1:
            raise DomainError(f"exponent p must exceed 1, got {self.p}")
        if self.kind is LawKind.REGULARIZED:
            if not 0 < self.eps < 1:
                raise DomainError(f"regularized law needs eps in (0,1), got {self.eps}")
        elif self.eps != 0:
            raise DomainError(f"eps is only meaningful for the regularized law")
        if self.kind is LawKind.CARREAU:
            if self.nu < 0:
                raise DomainError(f"Carreau law needs nu >= 0, got {self.nu}")
        elif self.nu != 0:
            raise DomainError("nu is only meaningful for the Carreau law")

    @classmethod
    def power(cls, p: float) -> "NonlinearityLaw":
        return cls(LawKind.PURE_POWER, p)

    @classmethod
    def regularized(cls, p: float, eps: float) -> "NonlinearityLaw":
        return cls(LawKind.REGULARIZED, p, eps=eps)

    @classmethod
    def carreau(cls, p: float, nu: float) -> "NonlinearityLaw":
        return cls(LawKind.CARREAU, p, nu=nu)

    @property
    def m_p(self) -> float:
        return min(self.p, 2.0)

    @property
    def M_p(self) -> float:
        return max(self.p, 2.0)

    @property
    def regular_at_zero(self) -> bool:
        """True when ``b`` is C^1 up to 0, so that ``a(0) = b'(0)`` exists."""
        if self.kind is LawKind.REGULARIZED:
            return True
        if self.kind is LawKind.CARREAU:
            return self.nu > 0 or self.p == 2
        return self.p == 2

    def index_bounds(self) -> tuple[float, float]:
        """Interval known to contain every value of ``theta``.

        Exact for the pure power (both ends equal ``p - 2``); for the other
        families ``theta`` moves between 0 and ``p - 2``.
        """
        if self.kind is LawKind.PURE_POWER:
            return self.p - 2, self.p - 2
        return self.m_p - 2, self.M_p - 2

    def describe(self) -> str:
        if self.kind is LawKind.PURE_POWER:
            return f"power(p={self.p:g})"
        if self.kind is LawKind.REGULARIZED:
            return f"regularized(p={self.p:g}, eps={self.eps:g})"
        return f"carreau(p={self.p:g}, nu={self.nu:g})"

    def with_eps(self, eps: float) -> "NonlinearityLaw":
        return NonlinearityLaw.regularized(self.p, eps)


def _check_t(law: NonlinearityLaw, t: np.ndarray, what: str, strict_power: bool):
    if np.any(t < 0):
        raise DomainError(f"{what}: negative argument")
    if law.regular_at_zero or not np.any(t == 0):
        return
    if law.kind is LawKind.PURE_POWER and law.p > 2 and not strict_power:
        return
    raise DomainError(f"{what}: {law.describe()} is not defined at t=0")


def eval_a(law: NonlinearityLaw, t):
    t = np.asarray(t, dtype=float)
    _check_t(law, t, "a", strict_power=False)
    q = (law.p - 2) / 2
    if law.kind is LawKind.PURE_POWER:
        return t ** (law.p - 2)
    if law.kind is LawKind.CARREAU:
        return (law.nu + t * t) ** q
    eps = law.eps
    g = (eps + t * t) ** q
    return (g + eps) / (1 + eps * g)


def eval_a_prime(law: NonlinearityLaw, t):
    t = np.asarray(t, dtype=float)
    _check_t(law, t, "a'", strict_power=not law.p >= 3)
    p = law.p
    if law.kind is LawKind.PURE_POWER:
        if p == 2:
            return np.zeros_like(t)
        return (p - 2) * t ** (p - 3)
    if law.kind is LawKind.CARREAU:
        return (p - 2) * t * (law.nu + t * t) ** ((p - 4) / 2)
    eps = law.eps
    s = eps + t * t
    g = s ** ((p - 2) / 2)
    dg = (p - 2) * t * s ** ((p - 4) / 2)
    return dg * (1 - eps * eps) / (1 + eps * g) ** 2


def eval_b(law: NonlinearityLaw, t):
    t = np.asarray(t, dtype=float)
    if law.kind is LawKind.PURE_POWER:
        if np.any(t < 0):
            raise DomainError("b: negative argument")
        return t ** (law.p - 1)
    out = t * eval_a(law, t)
    return out


def eval_b_prime(law: NonlinearityLaw, t):
    """``b'(t) = a(t) + a'(t) t``."""
    t = np.asarray(t, dtype=float)
    if law.kind is LawKind.PURE_POWER:
        _check_t(law, t, "b'", strict_power=True)
        return (law.p - 1) * t ** (law.p - 2)
    return eval_a(law, t) + eval_a_prime(law, t) * t


def eval_theta(law: NonlinearityLaw, t):
    t = np.asarray(t, dtype=float)
    if law.kind is LawKind.PURE_POWER:
        if np.any(t <= 0):
            raise DomainError("theta of a pure power is only defined for t > 0")
        return np.full_like(t, law.p - 2)
    if law.kind is LawKind.CARREAU and law.nu == 0 and np.any(t <= 0):
        raise DomainError("theta of the degenerate Carreau law needs t > 0")
    if np.any(t < 0):
        raise DomainError("theta: negative argument")
    # theta(0) = 0 by convention; the formula below already gives that
    return eval_a_prime(law, t) * t / eval_a(law, t)


@dataclass(frozen=True)
class IndexEstimate:
    """Grid approximation of the Simonenko indices.

    The scan can only see values attained on the grid, so ``(i_lower,
    s_upper)`` is an inner approximation of the true ``(i_a, s_a)``.
    """

    i_lower: float
    s_upper: float
    t_min: float
    t_max: float
    count: int


def estimate_indices(law: NonlinearityLaw, t_min: float = 1e-8,
                     t_max: float = 1e8, count: int = 4096) -> IndexEstimate:
    if not 0 < t_min < t_max:
        raise DomainError("need 0 < t_min < t_max")
    if count < 2:
        raise DomainError("need at least two sample points")
    ts = np.geomspace(t_min, t_max, count)
    th = eval_theta(law, ts)
    return IndexEstimate(float(th.min()), float(th.max()), t_min, t_max, count)


# --- Young functions -------------------------------------------------------

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


def _scale(law: NonlinearityLaw) -> float:
    if law.kind is LawKind.REGULARIZED:
        return math.sqrt(law.eps)
    if law.kind is LawKind.CARREAU and law.nu > 0:
        return math.sqrt(law.nu)
    return 1.0


def young_B_panels(law: NonlinearityLaw, t):
    """Vectorized ``B(t)`` by composite Gauss-Legendre on dyadic panels.

    Panels are ``[0, s]`` and ``[s 2^k, s 2^(k+1)]`` where ``s`` is the
    length scale at which the law bends (``sqrt(eps)`` or ``sqrt(nu)``).
    Each panel keeps the nearest complex singularity of the integrand at a
    fixed relative distance, so 16 nodes reach round-off.  Used wherever
    many values are needed at once (finite element energies).
    """
    t = np.asarray(t, dtype=float)
    if law.kind is LawKind.PURE_POWER:
        if np.any(t < 0):
            raise DomainError("B: negative argument")
        return t ** law.p / law.p
    if law.kind is LawKind.CARREAU and law.nu == 0:
        return t ** law.p / law.p
    s = _scale(law)
    flat = t.reshape(-1)
    tmax = float(flat.max()) if flat.size else 0.0
    k = max(1, int(math.ceil(math.log2(max(tmax / s, 1.0)))) + 1)
    lows = np.concatenate(([0.0], s * 2.0 ** np.arange(k)))
    highs = s * 2.0 ** np.arange(k + 1)
    lo = np.minimum(flat[:, None], lows[None, :])
    hi = np.minimum(flat[:, None], highs[None, :])
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    tau = mid[..., None] + half[..., None] * _GL_NODES
    vals = eval_b(law, tau) @ _GL_WEIGHTS
    return (vals * half).sum(axis=1).reshape(t.shape)


@dataclass(frozen=True)
class YoungFunctionView:
    law: NonlinearityLaw
    tol: float = 1e-10

    def B(self, t):
        return eval_B(self, t)

    def B_conjugate(self, t):
        return eval_B_conjugate(self, t)


def _quad(f, lo: float, hi: float, tol: float, what: str) -> float:
    val, err, info = integrate.quad(f, lo, hi, epsabs=tol, epsrel=1e-12,
                                    limit=200, full_output=True)[:3]
    if err > max(tol, 1e-12 * abs(val)) * 10:
        raise QuadratureError(
            f"{what}: quadrature on [{lo:g}, {hi:g}] did not converge "
            f"(estimate {val!r}, error {err:.3g}, {info['neval']} evaluations)")
    return val


def _breakpoints(law: NonlinearityLaw, t: float) -> list[float]:
    s = _scale(law)
    pts = [0.0]
    x = s
    while x < t:
        pts.append(x)
        x *= 4
    pts.append(t)
    return pts


def _B_scalar(view: YoungFunctionView, t: float) -> float:
    law = view.law
    if t == 0:
        return 0.0
    if law.kind is LawKind.PURE_POWER or (law.kind is LawKind.CARREAU and law.nu == 0):
        return t ** law.p / law.p
    if law.kind is LawKind.REGULARIZED and law.p == 2:
        return 0.5 * t * t
    pts = _breakpoints(law, t)
    return sum(_quad(lambda x: float(eval_b(law, x)), lo, hi, view.tol, "B")
               for lo, hi in zip(pts[:-1], pts[1:]))


def eval_B(view: YoungFunctionView, t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise DomainError("B: negative argument")
    out = np.array([_B_scalar(view, float(x)) for x in t.reshape(-1)])
    return out.reshape(t.shape) if t.shape else float(out[0])


def b_inverse(law: NonlinearityLaw, y: float, xtol: float = 1e-15) -> float:
    """Invert the strictly increasing ``b`` by bracket expansion and bisection."""
    if y < 0:
        raise DomainError("b^{-1}: negative argument")
    if y == 0:
        return 0.0
    if law.kind is LawKind.PURE_POWER:
        return y ** (1 / (law.p - 1))
    hi = 1.0
    while float(eval_b(law, hi)) < y:
        hi *= 2
    lo = hi / 2
    while lo > 0 and float(eval_b(law, lo)) > y:
        lo /= 2
        if lo < 1e-300:
            lo = 0.0
    return optimize.bisect(lambda s: float(eval_b(law, s)) - y, lo, hi,
                           xtol=xtol, rtol=4 * np.finfo(float).eps, maxiter=400)


def eval_B_conjugate(view: YoungFunctionView, t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise DomainError("conjugate B: negative argument")
    law = view.law

    def one(y: float) -> float:
        if y == 0:
            return 0.0
        if law.kind is LawKind.PURE_POWER:
            q = law.p / (law.p - 1)
            return y ** q / q
        # b^{-1} bends where b does, at b(scale)
        knots = [0.0]
        x = float(eval_b(law, _scale(law)))
        while x < y:
            knots.append(x)
            x *= 4
        knots.append(y)
        return sum(_quad(lambda z: b_inverse(law, z), lo, hi, view.tol, "conjugate B")
                   for lo, hi in zip(knots[:-1], knots[1:]))

    out = np.array([one(float(x)) for x in t.reshape(-1)])
    return out.reshape(t.shape) if t.shape else float(out[0])


def shifted_young(view: YoungFunctionView, m: float, t: float) -> float:
    """``int_0^t a(max(m, tau)) tau dtau``.

    On ``[0, min(m, t)]`` the integrand is ``a(m) tau`` and integrates in
    closed form; the rest is ``B(t) - B(m)``.
    """
    if m < 0 or t < 0:
        raise DomainError("shifted Young function needs m, t >= 0")
    if m == 0:
        return float(eval_B(view, t))
    head = float(eval_a(view.law, m)) * min(m, t) ** 2 / 2
    if t <= m:
        return head
    tail = _quad(lambda x: float(eval_b(view.law, x)), m, t, view.tol, "shifted B")
    return head + tail


# --- matrix maps -----------------------------------------------------------

def frob(xi):
    xi = np.asarray(xi, dtype=float)
    return np.sqrt(np.einsum("...ij,...ij->...", xi, xi))


def stress(law: NonlinearityLaw, xi):
    """``a(|xi|) xi``, and exactly 0 where ``xi = 0``."""
    xi = np.asarray(xi, dtype=float)
    r = frob(xi)
    nz = r > 0
    coef = np.zeros_like(r)
    coef[nz] = eval_a(law, r[nz])
    if law.regular_at_zero and np.any(~nz):
        coef[~nz] = eval_a(law, np.zeros(1))[0]
    return coef[..., None, None] * xi


def stress_jacobian(law: NonlinearityLaw, xi):
    """Fourth-order derivative tensor ``D[i, j, k, l] = d A_ij / d xi_kl``.

    ``D = a(|xi|) Id + (a'(|xi|)/|xi|) xi (x) xi``; at ``xi = 0`` only the
    ``a(0) Id`` part survives, which needs a law regular at 0.
    """
    xi = np.asarray(xi, dtype=float)
    n = xi.shape[-1]
    r = frob(xi)
    nz = r > 0
    if np.any(~nz) and not law.regular_at_zero:
        raise DomainError(f"{law.describe()} has no derivative at xi = 0")
    a = np.empty_like(r)
    c = np.zeros_like(r)
    a[nz] = eval_a(law, r[nz])
    c[nz] = eval_a_prime(law, r[nz]) / r[nz]
    if np.any(~nz):
        a[~nz] = eval_a(law, np.zeros(1))[0]
    eye = np.einsum("ik,jl->ijkl", np.eye(n), np.eye(n))
    return (a[..., None, None, None, None] * eye
            + c[..., None, None, None, None] * np.einsum("...ij,...kl->...ijkl", xi, xi))


def apply_jacobian(jac, eta):
    return np.einsum("...ijkl,...kl->...ij", jac, eta)


# --- inequality battery ----------------------------------------------------

@dataclass
class CheckRecord:
    name: str
    passed: bool
    worst_margin: float
    tolerance: float
    detail: dict = field(default_factory=dict)


@dataclass
class BatteryReport:
    law: str
    checks: list[CheckRecord]
    equivalence: tuple[float, float] | None = None

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def by_name(self, name: str) -> CheckRecord:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)


def stress_equivalence_range(law: NonlinearityLaw, count: int = 2000, n: int = 3,
                             rng=None) -> tuple[float, float]:
    """Observed range of ``|A(xi) - A(eta)| / (a(|xi| + |eta|) |xi - eta|)``.

    Pairs of random matrices with magnitudes spread over ``[1e-4, 1e3]``.
    The two-sided comparison has no explicit constants, so only the range
    is reported.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    xi, eta = rng.normal(size=(2, count, n, n))
    xi *= 10.0 ** rng.uniform(-4, 3, (count, 1, 1)) / frob(xi)[:, None, None]
    eta *= 10.0 ** rng.uniform(-4, 3, (count, 1, 1)) / frob(eta)[:, None, None]
    diff = frob(stress(law, xi) - stress(law, eta))
    ratio = diff / (eval_a(law, frob(xi) + frob(eta)) * frob(xi - eta))
    return float(ratio.min()), float(ratio.max())


def _record(name, margins, tol, **detail):
    worst = float(np.min(margins))
    return CheckRecord(name, worst >= -tol, worst, tol, detail)


def conjugate_growth_bound(law: NonlinearityLaw, t):
    """Explicit majorant of ``B~`` obtained by inverting the lower growth bound of ``b``."""
    t = np.asarray(t, dtype=float)
    b1 = float(eval_b(law, 1.0))
    r_big = 1 / (law.m_p - 1)
    r_small = 1 / (law.M_p - 1)
    low = np.minimum(t, b1)
    out = b1 / (r_small + 1) * (low / b1) ** (r_small + 1)
    over = t > b1
    out = out + np.where(over, b1 / (r_big + 1) * ((np.maximum(t, b1) / b1) ** (r_big + 1) - 1), 0.0)
    return out


def check_section2_battery(law: NonlinearityLaw, ts=None, *, tol: float = 1e-10,
                           young_grid: int = 100, young_max: float = 5.0,
                           radius: float = 10.0, eps_levels=range(1, 11),
                           conv_samples: int = 2001) -> BatteryReport:
    """Run the Young-function inequalities over a finite sample.

    Failures are recorded, never raised.  Margins are ``rhs - lhs`` style
    quantities that must stay nonnegative up to ``tol``; relative checks
    are scaled by the size of the compared values.
    """
    if ts is None:
        ts = np.concatenate(([0.0], np.geomspace(1e-6, 1e3, 400)))
    ts = np.sort(np.asarray(ts, dtype=float))
    pos = ts[ts > 0]
    view = YoungFunctionView(law, tol)
    m, M = law.m_p, law.M_p
    checks = []

    b = eval_b(law, pos)
    bp = eval_b_prime(law, pos)
    B = eval_B(view, pos)
    scale_B = np.maximum(1.0, np.abs(b * pos))

    checks.append(_record("young_below_b_times_t", (b * pos - B) / scale_B, tol))

    if law.kind is LawKind.REGULARIZED:
        dense = np.concatenate(([0.0], np.geomspace(1e-8, 1e6, 4000)))
        av = eval_a(law, dense)
        checks.append(_record("a_pinched_between_eps_and_inverse",
                              np.minimum(av - law.eps, 1 / law.eps - av), 1e-14))

    theta_at_zero = law.kind is LawKind.REGULARIZED or (law.kind is LawKind.CARREAU and law.nu > 0)
    th = eval_theta(law, ts if theta_at_zero else pos)
    lo_th, hi_th = m - 2, M - 2
    checks.append(_record("theta_within_index_bounds",
                          np.minimum(th - lo_th, hi_th - th), 1e-12))

    checks.append(_record("b_prime_index_bounds",
                          np.minimum(bp * pos - (m - 1) * b, (M - 1) * b - bp * pos)
                          / np.maximum(1.0, b), 1e-12))

    checks.append(_record("b_increasing", np.diff(eval_b(law, ts)), 0.0))

    checks.append(_record("B_index_bounds",
                          np.minimum(b * pos - m * B, M * B - b * pos) / scale_B, tol))

    b1 = float(eval_b(law, 1.0))
    B1 = float(eval_B(view, 1.0))
    lo_pow = np.minimum(pos ** (m - 1), pos ** (M - 1))
    hi_pow = np.maximum(pos ** (m - 1), pos ** (M - 1))
    checks.append(_record("b_power_growth",
                          np.minimum(b - b1 * lo_pow, b1 * hi_pow - b)
                          / np.maximum(1.0, b), 1e-12, constant=b1))
    lo_pow = np.minimum(pos ** m, pos ** M)
    hi_pow = np.maximum(pos ** m, pos ** M)
    scale = np.maximum(1.0, B)
    checks.append(_record("B_power_growth",
                          np.minimum(B - B1 * lo_pow, B1 * hi_pow - B) / scale, tol,
                          constant=B1))
    checks.append(_record("B_upper_growth", (B1 * (pos ** M + 1) - B) / scale, tol,
                          constant=B1))
    checks.append(_record("B_lower_growth", (B - B1 * (pos ** m - 1)) / scale, tol,
                          constant=B1))

    tc = np.geomspace(1e-4, 1e2, 60)
    Bc = eval_B_conjugate(view, tc)
    bound = conjugate_growth_bound(law, tc)
    checks.append(_record("conjugate_upper_growth",
                          (bound - Bc) / np.maximum(1.0, bound), tol))

    grid = np.linspace(0.0, young_max, young_grid)
    Bs = eval_B(view, grid)
    Bt = eval_B_conjugate(view, grid)
    young = Bs[:, None] + Bt[None, :] - grid[:, None] * grid[None, :]
    checks.append(_record("young_inequality", young, tol))

    if law.kind is LawKind.REGULARIZED:
        checks.extend(_convergence_checks(law.p, radius, eps_levels, conv_samples))

    return BatteryReport(law.describe(), checks, stress_equivalence_range(law))


def _convergence_checks(p, radius, eps_levels, samples):
    ts = np.union1d(np.linspace(0.0, radius, samples), np.geomspace(1e-8, radius, samples))
    B_p = ts ** p / p
    b_p = ts ** (p - 1)
    sup_B, sup_b = [], []
    for k in eps_levels:
        law = NonlinearityLaw.regularized(p, 2.0 ** -k)
        sup_B.append(float(np.max(np.abs(young_B_panels(law, ts) - B_p))))
        # |A_{p,eps}(xi) - A_p(xi)| = |b_{p,eps}(|xi|) - b_p(|xi|)|
        sup_b.append(float(np.max(np.abs(eval_b(law, ts) - b_p))))
    out = []
    for name, seq in (("B_uniform_convergence", sup_B), ("stress_uniform_convergence", sup_b)):
        diffs = -np.diff(seq)
        out.append(CheckRecord(name, bool(np.all(diffs > 0)),
                               float(diffs.min()) if diffs.size else 0.0, 0.0,
                               {"eps": [2.0 ** -k for k in eps_levels], "sup_distance": seq}))
    return out
