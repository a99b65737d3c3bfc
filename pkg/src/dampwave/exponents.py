"""Critical exponents, weights, growth factors and lifespan predictions.

Everything here is closed-form (plus two scalar root-finders) and pure.
The rest of the package consults these helpers for the regime of ``p``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

#: half-width of the band used to decide ``p == 2`` / ``p == 3`` for floats
REGIME_TOL = 1e-12


class Unbounded:
    """Marker for an exponent that is +infinity (Strauss exponent in 1D).

    Comparisons against real numbers work; arithmetic does not.
    """

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "UNBOUNDED"

    def __gt__(self, other):
        return not isinstance(other, Unbounded)

    def __ge__(self, other):
        return True

    def __lt__(self, other):
        return False

    def __le__(self, other):
        return isinstance(other, Unbounded)

    def __eq__(self, other):
        return isinstance(other, Unbounded)

    def __hash__(self):
        return hash("UNBOUNDED")


UNBOUNDED = Unbounded()


class Regime(str, enum.Enum):
    SUBCRITICAL_LOW = "subcritical_low"  # 1 < p < 2
    P_EQUAL_2 = "p_equal_2"
    SUBCRITICAL_HIGH = "subcritical_high"  # 2 < p < 3
    CRITICAL = "critical"  # p = 3


class Form(str, enum.Enum):
    POWER = "power"
    B_EPS = "b_eps"
    A_EPS = "a_eps"
    EXPONENTIAL = "exponential"


class Reference(str, enum.Enum):
    NEW_1D = "new_1d"
    HEAT = "heat"
    WAVE = "wave"
    NONDAMPED = "nondamped"


class WeightKind(str, enum.Enum):
    UNIT = "unit"  # p > 2
    INV_LOG = "inv_log"  # p = 2
    POWER = "power"  # 1 < p < 2


@dataclass(frozen=True)
class ProblemParams:
    """Parameters of the damped problem: ``v_tt - v_xx + mu/(1+t) v_t = |v|^p``."""

    p: float = 2.0
    n: int = 1
    mu: float = 2.0
    k: float = 2.0
    eps: float = 1.0

    def __post_init__(self):
        if not self.p > 1:
            raise ValueError(f"p must exceed 1, got {self.p}")
        if not self.k > 1:
            raise ValueError(f"support radius k must exceed 1, got {self.k}")
        if self.eps < 0:
            raise ValueError(f"eps must be nonnegative, got {self.eps}")
        if self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n}")
        if self.mu < 0:
            raise ValueError(f"mu must be nonnegative, got {self.mu}")

    def require_solver_setting(self, allowed_mu=(0.0, 2.0)):
        """Raise unless this parameter set is one the 1D solvers handle."""
        if self.n != 1:
            raise ValueError("solvers are one-dimensional (n=1)")
        if self.mu not in allowed_mu:
            raise ValueError(f"solver supports mu in {allowed_mu}, got {self.mu}")

    def with_eps(self, eps) -> "ProblemParams":
        return ProblemParams(p=self.p, n=self.n, mu=self.mu, k=self.k, eps=eps)


def _cmp(p, ref) -> int:
    """Three-way compare of ``p`` with an integer boundary.

    Exact for ``int``/``Fraction`` input, within ``REGIME_TOL`` for floats.
    """
    if isinstance(p, (int, Fraction)):
        return (p > ref) - (p < ref)
    d = float(p) - ref
    if abs(d) <= REGIME_TOL:
        return 0
    return 1 if d > 0 else -1


def regime_of(p) -> Regime:
    """Lifespan regime of the 1D, mu=2 problem; rejects p outside (1, 3]."""
    if _cmp(p, 1) <= 0 or _cmp(p, 3) > 0:
        raise ValueError(f"p must lie in (1, 3], got {p}")
    c2 = _cmp(p, 2)
    if c2 < 0:
        return Regime.SUBCRITICAL_LOW
    if c2 == 0:
        return Regime.P_EQUAL_2
    if _cmp(p, 3) < 0:
        return Regime.SUBCRITICAL_HIGH
    return Regime.CRITICAL


def gamma(p, n) -> float:
    """``2 + (n+1) p - (n-1) p^2``; ``n`` may be a real (shifted) dimension."""
    return 2 + (n + 1) * p - (n - 1) * p * p


def fujita_exponent(n) -> float:
    return 1 + 2 / n


def strauss_exponent(n):
    """Positive root of ``gamma(p, n) = 0``; :data:`UNBOUNDED` when ``n == 1``."""
    if n == 1:
        return UNBOUNDED
    return (n + 1 + math.sqrt(n * n + 10 * n - 7)) / (2 * (n - 1))


def mu_zero(n):
    """Heat/wave threshold; exact ``Fraction`` for integer ``n``."""
    if isinstance(n, int):
        return Fraction(n * n + n + 2, n + 2)
    return (n * n + n + 2) / (n + 2)


def classify_regime(params: ProblemParams) -> str:
    """``"heat_like"`` when ``mu >= mu_0(n)``, else ``"wave_like"``."""
    n = params.n
    num, den = n * n + n + 2, n + 2
    # integer n: compare mu*den >= num without division
    if params.mu * den >= num:
        return "heat_like"
    return "wave_like"


def _solve_monotone(g, dg, lo, hi, tol_res=1e-12, max_iter=200):
    """Root of increasing ``g`` on ``[lo, hi]``: bisection to 1e-6 then Newton."""
    glo, ghi = g(lo), g(hi)
    if not (glo < 0 < ghi):
        raise RuntimeError(f"root not bracketed on [{lo}, {hi}]")
    it = 0
    while hi - lo > 1e-6 * hi and it < max_iter:
        mid = 0.5 * (lo + hi)
        if g(mid) < 0:
            lo = mid
        else:
            hi = mid
        it += 1
    x = 0.5 * (lo + hi)
    for _ in range(max_iter):
        r = g(x)
        if abs(r) <= tol_res * 0.1:
            return x
        step = r / dg(x)
        xn = x - step
        if not lo <= xn <= hi:
            xn = 0.5 * (lo + hi)
        if r < 0:
            lo = x
        else:
            hi = x
        if xn == x:
            break
        x = xn
    if abs(g(x)) <= tol_res:
        return x
    raise RuntimeError("root finder did not converge")


def solve_b(eps: float) -> float:
    """Positive ``b`` with ``eps^2 * b * log(1+b) = 1``."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    e2 = eps * eps
    return _solve_monotone(
        lambda b: e2 * b * math.log1p(b) - 1.0,
        lambda b: e2 * (math.log1p(b) + b / (1.0 + b)),
        1e-16,
        max(1.0, 10.0 / e2),
    )


def solve_a(eps: float) -> float:
    """Positive ``a`` with ``eps^2 * a^2 * log(1+a) = 1`` (2D undamped, p=2)."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    e2 = eps * eps
    return _solve_monotone(
        lambda a: e2 * a * a * math.log1p(a) - 1.0,
        lambda a: e2 * (2 * a * math.log1p(a) + a * a / (1.0 + a)),
        1e-16,
        max(1.0, 10.0 / eps),
    )


def weight_kind(p) -> WeightKind:
    c = _cmp(p, 2)
    if c > 0:
        return WeightKind.UNIT
    if c == 0:
        return WeightKind.INV_LOG
    return WeightKind.POWER


def tau_plus(r, t, k):
    return (np.asarray(t) + np.asarray(r) + 2 * k) / k


def weight_w(r, t, params: ProblemParams):
    """Regime weight of the contraction norm; vectorised over ``r`` and ``t``."""
    tp = tau_plus(r, t, params.k)
    kind = weight_kind(params.p)
    if kind is WeightKind.UNIT:
        out = np.ones_like(tp, dtype=float)
    elif kind is WeightKind.INV_LOG:
        out = 1.0 / np.log(tp)
    else:
        out = tp ** (float(params.p) - 2.0)
    return out if np.ndim(out) else float(out)


def growth_D(T, params: ProblemParams):
    """Growth factor of the main a-priori estimate, with ``T_k = (T+2k)/k``."""
    p = params.p
    Tk = (np.asarray(T, dtype=float) + 2 * params.k) / params.k
    if _cmp(p, 3) == 0:
        out = np.log(Tk)
    elif _cmp(p, 2) > 0:
        out = Tk ** (3.0 - float(p))
    elif _cmp(p, 2) == 0:
        out = Tk * np.log(Tk)
    else:
        out = Tk ** (gamma(float(p), 3) / 2)
    return out if np.ndim(out) else float(out)


@dataclass(frozen=True)
class LifespanPrediction:
    """Shape of a lifespan law; multiplicative constants are left free.

    ``power``: T ~ C eps^-exponent.  ``exponential``: T ~ exp(C eps^-exponent).
    ``b_eps``/``a_eps``: T ~ C b(eps) (or a(eps)); ``scale`` holds that root.
    """

    regime: Regime
    form: Form
    exponent: Optional[float]
    reference: Reference
    scale: Optional[float] = None


def _table_regime(p) -> Regime:
    # only used to label the heat/wave/nondamped forms; clamps p>3 into CRITICAL
    if _cmp(p, 3) > 0:
        return Regime.CRITICAL
    return regime_of(p)


def predicted_lifespan(eps, params: ProblemParams, reference="new_1d") -> LifespanPrediction:
    ref = Reference(reference)
    p = params.p
    pf = float(p)
    if ref is Reference.NEW_1D:
        reg = regime_of(p)
        if reg is Regime.SUBCRITICAL_LOW:
            return LifespanPrediction(reg, Form.POWER, 2 * pf * (pf - 1) / gamma(pf, 3), ref)
        if reg is Regime.P_EQUAL_2:
            return LifespanPrediction(reg, Form.B_EPS, None, ref, scale=solve_b(eps))
        if reg is Regime.SUBCRITICAL_HIGH:
            return LifespanPrediction(reg, Form.POWER, pf * (pf - 1) / (3 - pf), ref)
        return LifespanPrediction(reg, Form.EXPONENTIAL, pf * (pf - 1), ref)

    if _cmp(p, 1) <= 0:
        raise ValueError("p must exceed 1")
    n = params.n
    if ref is Reference.HEAT:
        pF = fujita_exponent(n)
        if pf < pF - REGIME_TOL:
            return LifespanPrediction(
                _table_regime(p), Form.POWER, (pf - 1) / (2 - n * (pf - 1)), ref
            )
        if abs(pf - pF) <= REGIME_TOL:
            return LifespanPrediction(_table_regime(p), Form.EXPONENTIAL, pf - 1, ref)
        raise ValueError(f"p={p} above the Fujita exponent: no finite heat-like lifespan")
    if ref is Reference.WAVE:
        dim = n + params.mu
        pS = strauss_exponent(dim)
        if isinstance(pS, Unbounded) or pf < pS - REGIME_TOL:
            return LifespanPrediction(
                _table_regime(p), Form.POWER, 2 * pf * (pf - 1) / gamma(pf, dim), ref
            )
        if abs(pf - pS) <= REGIME_TOL:
            return LifespanPrediction(_table_regime(p), Form.EXPONENTIAL, pf * (pf - 1), ref)
        raise ValueError(f"p={p} above the Strauss exponent: no finite wave-like lifespan")
    # non-damped, nonzero total speed
    if n == 1:
        return LifespanPrediction(_table_regime(p), Form.POWER, (pf - 1) / 2, ref)
    if n == 2 and pf < 2 - REGIME_TOL:
        return LifespanPrediction(_table_regime(p), Form.POWER, (pf - 1) / (3 - pf), ref)
    if n == 2 and abs(pf - 2) <= REGIME_TOL:
        return LifespanPrediction(_table_regime(p), Form.A_EPS, None, ref, scale=solve_a(eps))
    raise ValueError("non-damped table only covers n=1 and n=2 with p<=2")
