"""Blow-up functional ``F(t) = int u dx`` and the ODE machinery around it.

Covers the discrete identity ``F'' = (1+t)^{1-p} int |u|^p``, the Hoelder and
pointwise lower bounds, a Kato-type lifespan bound with an explicit constant,
the ODE comparison surrogate, the lower-bound cascade and the slicing
recursion for ``p = 3``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np
from scipy import integrate, optimize

from .data import DataProfile
from .duhamel import CharacteristicField, MarchResult
from .exponents import ProblemParams, Regime, _cmp, regime_of
from .fd import FDResult


@dataclass
class FunctionalTrace:
    t: np.ndarray
    F: np.ndarray
    dF: np.ndarray
    d2F: np.ndarray
    source: np.ndarray  # int |u|^p dx per row
    rhs: np.ndarray  # (1+t)^{1-p} int |u|^p dx
    p: float
    k: float
    status: str = "completed"

    @property
    def identity_residual(self) -> np.ndarray:
        """Relative residual of ``F'' = rhs`` on interior rows."""
        i = slice(1, -1)
        den = np.maximum(np.abs(self.rhs[i]), 1e-300)
        return np.abs(self.d2F[i] - self.rhs[i]) / den

    def to_rows(self):
        return [dict(t=a, F=b, dF=c, d2F=d, source=e) for a, b, c, d, e in zip(self.t, self.F, self.dF, self.d2F, self.source)]


def compute_F(run, p: Optional[float] = None, k: Optional[float] = None) -> FunctionalTrace:
    """Trace of ``F``, ``F'``, ``F''`` from a march result or a stored field.

    Integrals use the trapezoidal rule in ``x`` (values vanish at the ends).
    Derivatives are second-order centred differences, one-sided at the ends.
    """
    if isinstance(run, (MarchResult, FDResult)):
        t, F, S, status = run.t, run.F, run.S, run.status
        p, k = run.p, run.k
        if status == "blew_up":
            # the threshold row is not a regular solution row
            t, F, S = t[:-1], F[:-1], S[:-1]
    elif isinstance(run, CharacteristicField):
        if p is None:
            raise ValueError("p is required when passing a field")
        h = run.grid.h
        t = run.t
        F = integrate.trapezoid(run.values, dx=h, axis=1)
        S = integrate.trapezoid(np.abs(run.values) ** p, dx=h, axis=1)
        k = run.grid.k if k is None else k
        status = "completed"
    else:
        raise TypeError("compute_F expects a solver result or a CharacteristicField")
    if len(t) < 3:
        raise ValueError("need at least three rows for second differences")
    dt = t[1] - t[0]
    dF = np.gradient(F, dt, edge_order=2)
    d2F = np.empty_like(F)
    d2F[1:-1] = (F[2:] - 2 * F[1:-1] + F[:-2]) / dt**2
    d2F[0] = d2F[1]
    d2F[-1] = d2F[-2]
    rhs = (1.0 + t) ** (1.0 - p) * S
    return FunctionalTrace(t, F, dF, d2F, S, rhs, float(p), float(k), status)


@dataclass
class InequalityReport:
    ok: bool
    slack: float
    needed_slack: float
    worst_t: Optional[float]
    worst_x: Optional[float] = None
    checked: int = 0


def holder_lower_bound_check(trace: FunctionalTrace, slack: float = 0.02) -> InequalityReport:
    """``F'' >= 2^{-(p-1)} (t+k)^{-2(p-1)} |F|^p`` on interior rows, up to ``slack``.

    ``needed_slack`` is the smallest relative slack making every row pass.
    """
    p, k = trace.p, trace.k
    i = slice(1, -1)
    lhs = trace.d2F[i]
    rhs = 2.0 ** (1 - p) * (trace.t[i] + k) ** (-2 * (p - 1)) * np.abs(trace.F[i]) ** p
    with np.errstate(divide="ignore", invalid="ignore"):
        need = np.where(rhs > 0, 1.0 - lhs / rhs, 0.0)
    need = np.maximum(need, 0.0)
    j = int(np.argmax(need)) if need.size else 0
    worst = float(need[j]) if need.size else 0.0
    return InequalityReport(worst <= slack, slack, worst, float(trace.t[i][j]) if need.size else None, checked=int(need.size))


def pointwise_bound_check(field: CharacteristicField, profile: DataProfile, params: ProblemParams, slack: float = 0.02) -> InequalityReport:
    """``u >= eps f(x-t)/2`` where ``x+t >= k`` and ``|x-t| <= k``, up to ``slack``.

    Slack is relative to ``eps max f / 2``; nodes outside the strip are not checked.
    """
    if not profile.thm22:
        raise ValueError("pointwise bound needs f >= 0 and f + g = 0")
    X, T = np.meshgrid(field.x, field.t)
    k = params.k
    region = (X + T >= k) & (np.abs(X - T) <= k)
    bound = 0.5 * params.eps * profile.f(X - T)
    scale = 0.5 * params.eps * profile.f_sup
    if not region.any() or scale == 0:
        return InequalityReport(True, slack, 0.0, None, checked=int(region.sum()))
    deficit = np.where(region, (bound - field.values) / scale, -np.inf)
    j = np.unravel_index(int(np.argmax(deficit)), deficit.shape)
    worst = max(float(deficit[j]), 0.0)
    return InequalityReport(worst <= slack, slack, worst, float(T[j]), float(X[j]), int(region.sum()))


# --------------------------------------------------------------------------
# Kato-type lemma
# --------------------------------------------------------------------------


@dataclass
class KatoParams:
    """Data of the comparison lemma.

    ``F >= A t^a`` for ``t >= T0``; ``F'' >= B (t+k)^{-q} |F|^p``;
    ``F(t0) >= 2 F(0)``.
    """

    p: float
    a: float
    q: float
    A: float
    B: float
    T0: float
    t0: float
    k: float

    @property
    def M(self) -> float:
        return (self.p - 1) * self.a / 2 - self.q / 2 + 1

    @property
    def T1(self) -> float:
        return max(self.T0, self.t0, self.k)

    def c_star(self) -> float:
        """Explicit admissible constant in ``T1 >= C_* A^{-(p-1)/(2M)}``.

        From ``F'(t)^2 >= 2B/(p+1) (t2+k)^{-q} (F^{p+1} - F(0)^{p+1})`` on
        ``[0, t2]`` and ``F >= 2F(0)`` beyond ``t0``, separation of variables on
        ``[T1, lam T1]`` with ``lam = 2^{2/M}`` contradicts survival once
        ``T1^M > C_*^M A^{-(p-1)/2}``.
        """
        M, p, q = self.M, self.p, self.q
        lam = 2.0 ** (2.0 / M)
        c1 = math.sqrt(2.0 * (1.0 - 2.0 ** (-(p + 1))) / (p + 1))
        cm = 2.0 / ((p - 1) * c1 * math.sqrt(self.B)) * (lam + 1.0) ** (q / 2) / (lam - 1.0)
        return cm ** (1.0 / M)

    def admissible_T1(self) -> float:
        """Smallest ``T1`` meeting both its definition and the size condition."""
        return max(self.T1, self.c_star() * self.A ** (-(self.p - 1) / (2 * self.M)))


def kato_lifespan_bound(kp: KatoParams) -> float:
    """Upper bound ``2^{2/M} T1`` for the lifespan; rejects ``M <= 0``."""
    if not kp.M > 0:
        raise ValueError(f"Kato lemma needs M > 0 (got M={kp.M}); the critical case uses slicing")
    return 2.0 ** (2.0 / kp.M) * kp.admissible_T1()


def kato_setup(p, A, k, T0, t0) -> KatoParams:
    """Lemma data for the subcritical cases: ``a = 3-p`` (p<2) or ``a = 1`` (p>=2)."""
    a = 3.0 - p if _cmp(p, 2) < 0 else 1.0
    return KatoParams(p=float(p), a=a, q=2.0 * (p - 1), A=A, B=2.0 ** (-(p - 1)), T0=T0, t0=t0, k=k)


# --------------------------------------------------------------------------
# lower-bound cascade
# --------------------------------------------------------------------------


def cascade_shape(p, t, k):
    """``t^{3-p}`` (p<2), ``t log(t/2k)`` (p=2), ``t`` (p>2)."""
    t = np.asarray(t, dtype=float)
    if _cmp(p, 2) < 0:
        out = t ** (3.0 - float(p))
    elif _cmp(p, 2) == 0:
        out = t * np.log(t / (2 * k))
    else:
        out = t.copy()
    return out if out.ndim else float(out)


def lower_bound_cascade(eps, params: ProblemParams, t, C: float = 1.0):
    """``C eps^p shape(t)`` for ``t >= 4k``."""
    if np.any(np.asarray(t) < 4 * params.k):
        raise ValueError("lower bound only claimed for t >= 4k")
    return C * eps ** float(params.p) * cascade_shape(params.p, t, params.k)


def source_constant(profile: DataProfile, p: float) -> float:
    """Constant ``c`` in ``F'' >= c eps^p t^{1-p}`` for ``t >= k``.

    Both outgoing pulses obey ``u >= eps f(x -+ t)/2`` and ``(1+t) <= 2t``.
    """
    return 2.0 ** (2.0 - 2.0 * p) * profile.f_power_integral(p)


def linear_lower_bound(profile: DataProfile, params: ProblemParams, t):
    """Lower bound for ``F`` from the free part only: ``F(0)`` plus the
    double integral of ``c eps^p (1+s)^{1-p}`` over ``k <= s <= t``."""
    p, k, eps = float(params.p), params.k, params.eps
    c = 2.0 ** (1.0 - p) * profile.f_power_integral(p)  # both pulses, (1+s)^{1-p} kept exact
    t = np.asarray(t, dtype=float)
    s = np.maximum(t, k)
    # int_k^t int_k^s (1+r)^{1-p} dr ds in closed form
    if _cmp(p, 2) == 0:
        inner = (1 + s) * np.log((1 + s) / (1 + k)) - (s - k)
    else:
        e = 2.0 - p
        inner = ((1 + s) ** (e + 1) - (1 + k) ** (e + 1)) / (e * (e + 1)) - (1 + k) ** e * (s - k) / e
    out = eps * profile.f_l1 + c * eps**p * inner
    return out if out.ndim else float(out)


def calibrate_cascade(profile: DataProfile, params: ProblemParams, t_hi: float = 1e12) -> dict:
    """Lemma inputs measured from the free-part lower bound of ``F``.

    ``A = min_{t >= 4k} F_lb(t) / t^a`` over a log grid, ``T0 = 4k`` and ``t0``
    the first time ``F_lb`` doubles ``F(0)``.
    """
    p, k, eps = float(params.p), params.k, params.eps
    a = 3.0 - p if _cmp(p, 2) < 0 else 1.0
    ts = np.geomspace(4 * k, max(t_hi, 40 * k), 4000)
    flb = linear_lower_bound(profile, params, ts)
    A = float(np.min(flb / ts**a))
    F0 = eps * profile.f_l1
    g = lambda t: linear_lower_bound(profile, params, t) - 2 * F0  # noqa: E731
    hi = 2 * k
    while g(hi) < 0:
        hi *= 2
    t0 = optimize.brentq(g, k, hi, xtol=1e-12) if g(k) < 0 else k
    return {"A": A, "a": a, "T0": 4 * k, "t0": float(t0), "C": A / eps**p}


def kato_bound_for(profile: DataProfile, params: ProblemParams) -> float:
    """Kato lifespan bound with constants calibrated from the data."""
    cal = calibrate_cascade(profile, params)
    kp = kato_setup(float(params.p), cal["A"], params.k, cal["T0"], cal["t0"])
    return kato_lifespan_bound(kp)


def t0_doubling(eps, params: ProblemParams, C: float = 1.0, f_l1: float = 32.0 / 35.0) -> float:
    """Solve ``C eps^p shape(t0) = 2 ||f||_1 eps`` for ``t0``."""
    p, k = float(params.p), params.k
    if _cmp(params.p, 3) == 0:
        raise ValueError("t0 doubling is only used in the subcritical cases")
    target = 2.0 * f_l1 * eps ** (1.0 - p) / C
    if _cmp(params.p, 2) < 0:
        return target ** (1.0 / (3.0 - p))
    if _cmp(params.p, 2) > 0:
        return target
    g = lambda t: t * math.log(t / (2 * k)) - target  # noqa: E731
    hi = 4 * k
    while g(hi) < 0:
        hi *= 2
    return optimize.brentq(g, 2 * k * (1 + 1e-15), hi, xtol=1e-13, rtol=1e-14)


# --------------------------------------------------------------------------
# ODE comparison surrogate
# --------------------------------------------------------------------------


@dataclass
class LifespanRecord:
    eps: float
    p: float
    solver: str
    t_blowup: Optional[float]
    log_t_blowup: Optional[float]
    status: str
    h: Optional[float] = None
    confirmed: bool = True
    walltime: float = 0.0


def ode_comparison_lifespan(
    eps,
    params: ProblemParams,
    c1: Optional[float] = None,
    c2: Optional[float] = None,
    profile: Optional[DataProfile] = None,
    rtol: float = 1e-10,
    atol: float = 1e-12,
    psi_blowup: float = 1e8,
    psi_collapse: float = 1e4,
    psi_rebase: float = 1e3,
    tau_max: float = 1e12,
    method: str = "RK45",
) -> LifespanRecord:
    """Blow-up time of ``F'' = c1 (t+k)^{-q} |F|^p + c2 eps^p t^{1-p} 1_{t>=k}``.

    ``F(0) = eps ||f||_1``, ``F'(0) = 0`` and ``q = 2(p-1)``.  Integrated by the
    embedded 5(4) Runge-Kutta pair in ``tau = log(1 + t/k)`` with state
    ``(log F, psi)``, ``psi = (t+k) F'/F``, so astronomically long lifespans
    stay representable.  Blow-up is declared once ``psi`` exceeds
    ``psi_blowup``: near a blow-up ``psi ~ 2 (t+k) / ((p-1)(T-t))``, so the
    remaining time is below ``2/((p-1) psi_blowup)`` relative; it is added back.
    Once ``psi`` passes ``psi_rebase`` the time origin is moved to the current
    point so the final approach is resolved for any lifespan.  A step collapse
    with ``psi >= psi_collapse`` also counts as blow-up.  ``method`` is any
    :func:`scipy.integrate.solve_ivp` method; ``LSODA`` crosses the long
    quasi-steady phase of the critical case much faster.
    """
    import time

    t_start = time.perf_counter()
    profile = profile or DataProfile(k=params.k)
    p, k = float(params.p), params.k
    q = 2.0 * (p - 1.0)
    c1 = 2.0 ** (-(p - 1.0)) if c1 is None else c1
    c2 = source_constant(profile, p) if c2 is None else c2
    F0 = eps * profile.f_l1
    rec = lambda st, lt=None: LifespanRecord(  # noqa: E731
        eps, p, "ode", None if lt is None or lt > 700 else math.exp(lt), None if lt is None else float(lt), st, walltime=time.perf_counter() - t_start
    )
    if F0 <= 0:
        return rec("no_blowup")
    lk = math.log(k)
    le = math.log(eps)
    tau_k = math.log(2.0)

    # time is tau = base + sigma; rebasing keeps sigma small near the asymptote
    def rhs(sig, y, base):
        tau = base + sig
        lnF, psi = y[0], min(y[1], 1e150)  # keep trial steps finite
        lnTk = lk + tau
        val = psi - psi * psi + c1 * math.exp(min((2.0 - q) * lnTk + (p - 1.0) * lnF, 700.0))
        if tau >= tau_k:
            lnt = lk + tau + math.log1p(-math.exp(-tau))
            val += c2 * math.exp(min(p * le + 2.0 * lnTk + (1.0 - p) * lnt - lnF, 700.0))
        return [psi, val]

    def log_t(tau_b):
        return lk + tau_b + math.log1p(-math.exp(-tau_b))

    def ev(level):
        def f(sig, y, base):
            return y[1] - level

        f.terminal = True
        f.direction = 1
        return f

    y = [math.log(F0), 0.0]
    # stages: up to the source switch, then to psi_rebase, then to psi_blowup
    stages = ((0.0, tau_k, None), (tau_k, tau_max, psi_rebase), (None, None, psi_blowup))
    base = 0.0
    for a, b, level in stages:
        if a is None:
            a, b = base, tau_max
        base = a
        try:
            sol = integrate.solve_ivp(
                rhs, (0.0, b - a), y, method=method, args=(base,), events=ev(level) if level else None, rtol=rtol, atol=atol
            )
        except (ValueError, OverflowError, FloatingPointError):
            return rec("unresolved")
        if sol.status == 1 and len(sol.t_events[0]):
            y = list(sol.y_events[0][0])
            base = base + float(sol.t_events[0][0])
            if level == psi_blowup:
                return rec("blew_up", log_t(base + 2.0 / ((p - 1.0) * psi_blowup)))
            continue
        if sol.status == -1 and sol.y[1, -1] >= psi_collapse:
            # step collapse deep inside the blow-up
            tau_b = base + float(sol.t[-1]) + 2.0 / ((p - 1.0) * sol.y[1, -1])
            return rec("blew_up", log_t(tau_b))
        if sol.status != 0 or level is not None:
            return rec("unresolved")
        y = list(sol.y[:, -1])
    return rec("unresolved")


# --------------------------------------------------------------------------
# slicing recursion for p = 3
# --------------------------------------------------------------------------


SERIES_S = 13.5  # sum_{i>=0} (2i+8)/3^i = 2*(3/4) + 8*(3/2)


@dataclass
class SlicingState:
    j: int
    a_j: Fraction
    b_j: int
    log_D_j: float


@dataclass
class SlicingReport:
    states: list
    K: float
    log_D0: float
    S: float
    log_bound: float  # log of 2K exp((3^S/D0)^2)
    closed_form_ok: bool
    notes: list = field(default_factory=list)

    def I(self, t):
        """``(D0/3^S) log^{1/2}(t/2K)``."""
        return self.I_log(math.log(t))

    def I_log(self, log_t):
        """``I`` at ``t = exp(log_t)``, for times beyond float range."""
        return math.exp(self.log_D0 - self.S * math.log(3)) * math.sqrt(log_t - math.log(2 * self.K))

    def to_json(self) -> dict:
        return {
            "K": self.K,
            "log_D0": self.log_D0,
            "S": self.S,
            "log_bound": self.log_bound,
            "closed_form_ok": self.closed_form_ok,
            "states": [
                {"j": s.j, "a_j": float(s.a_j), "b_j": s.b_j, "log_D_j": s.log_D_j} for s in self.states
            ],
        }


def series_S(terms: Optional[int] = None) -> float:
    """Partial (or, with ``terms=None``, closed-form) sum of ``(2i+8)/3^i``."""
    if terms is None:
        return SERIES_S
    return math.fsum((2 * i + 8) / 3.0**i for i in range(terms))


def slicing_cascade(eps, params: ProblemParams, j_max: int = 30, C: float = 1.0) -> SlicingReport:
    """Iterate ``b_{j+1} = 3 b_j + 1`` and ``D_{j+1} = D_j^3 / (2^{j+8}(3 b_j + 1))``
    from ``b_0 = 0``, ``D_0 = C eps^3``; ``log D_j`` avoids overflow."""
    if regime_of(params.p) is not Regime.CRITICAL:
        raise ValueError("slicing cascade is for p = 3")
    if not 0 <= j_max <= 40:
        raise ValueError("j_max must lie in [0, 40]")
    K = 4.0 * params.k
    logD = math.log(C) + 3.0 * math.log(eps)
    log_D0 = logD
    a = Fraction(1)
    b = 0
    states = [SlicingState(0, a, b, logD)]
    ok = True
    for j in range(j_max):
        logD = 3.0 * logD - ((j + 8) * math.log(2.0) + math.log(3 * b + 1))
        b = 3 * b + 1
        a = a + Fraction(1, 2 ** (j + 1))
        ok &= b == (3 ** (j + 1) - 1) // 2 and (3 ** (j + 1) - 1) % 2 == 0
        states.append(SlicingState(j + 1, a, b, logD))
    S = SERIES_S
    e = 2.0 * (S * math.log(3.0) - log_D0)
    log_bound = math.log(2 * K) + (math.exp(e) if e < 700 else math.inf)
    return SlicingReport(states, K, log_D0, S, log_bound, ok)


def b_closed_form(j: int) -> Fraction:
    return Fraction(3**j - 1, 2)


def b_recursion(j: int) -> Fraction:
    b = Fraction(0)
    for _ in range(j):
        b = 3 * b + 1
    return b


def asdict_record(r: LifespanRecord) -> dict:
    return asdict(r)
