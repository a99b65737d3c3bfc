"""Duhamel operator on a characteristic lattice, marching and Picard solvers.

The lattice has ``dx = dt = h`` so that the characteristics ``x +- t`` are grid
diagonals.  On such a lattice any free wave ``a(x+t) + b(x-t)`` satisfies the
diamond identity exactly, and the source enters through the integral of
``|u|^p / (1+s)^(p-1)`` over each characteristic diamond.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import integrate

from . import kernels
from .data import DataProfile, dalembert_u0
from .exponents import (
    ProblemParams,
    WeightKind,
    _cmp,
    gamma,
    growth_D,
    weight_kind,
    weight_w,
)


@dataclass(frozen=True)
class CharacteristicGrid:
    """Uniform lattice on ``[-X, X] x [0, t_max]`` with ``dx = dt = h``."""

    h: float
    X: float
    t_max: float
    k: float

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError("h must be positive")
        for name in ("X", "t_max", "k"):
            q = getattr(self, name) / self.h
            if abs(q - round(q)) > 1e-9:
                raise ValueError(f"{name}={getattr(self, name)} is not a multiple of h={self.h}")
        if self.X < self.t_max + self.k:
            raise ValueError("X must contain the light cone |x| <= t_max + k")

    @classmethod
    def for_problem(cls, k: float, N: int, t_max: float, margin: int = 2) -> "CharacteristicGrid":
        """Lattice with ``h = k/N`` reaching at least ``t_max``."""
        h = k / N
        nt = int(math.ceil(t_max / h - 1e-9))
        return cls(h=h, X=(nt + N + margin) * h, t_max=nt * h, k=k)

    @property
    def K(self) -> int:
        return int(round(self.k / self.h))

    @property
    def n_rows(self) -> int:
        return int(round(self.t_max / self.h)) + 1

    @property
    def n_cols(self) -> int:
        return 2 * int(round(self.X / self.h)) + 1

    @property
    def c(self) -> int:
        return int(round(self.X / self.h))

    @property
    def x(self) -> np.ndarray:
        return (np.arange(self.n_cols) - self.c) * self.h

    @property
    def t(self) -> np.ndarray:
        return np.arange(self.n_rows) * self.h

    def cone_mask(self, t=None) -> np.ndarray:
        t = self.t if t is None else np.asarray(t)
        return np.abs(self.x)[None, :] <= t[:, None] + self.k + 1e-9 * self.h

    def sample(self, fn, t=None) -> np.ndarray:
        """Evaluate ``fn(x, t)`` on all lattice rows (or the given times)."""
        t = self.t if t is None else np.asarray(t)
        X, T = np.meshgrid(self.x, t)
        return np.asarray(fn(X, T), dtype=float)


@dataclass
class CharacteristicField:
    """Values on lattice rows; ``t`` lists the time of every stored row."""

    values: np.ndarray
    grid: CharacteristicGrid
    t: np.ndarray

    @classmethod
    def full(cls, values, grid):
        values = np.asarray(values, dtype=float)
        if values.shape != (grid.n_rows, grid.n_cols):
            raise ValueError(f"field shape {values.shape} does not match grid {(grid.n_rows, grid.n_cols)}")
        return cls(values, grid, grid.t)

    @property
    def x(self) -> np.ndarray:
        return self.grid.x

    @property
    def mask(self) -> np.ndarray:
        return self.grid.cone_mask(self.t)

    @property
    def is_full(self) -> bool:
        return self.values.shape[0] == self.grid.n_rows and np.allclose(self.t, self.grid.t)

    def outside_cone_max(self) -> float:
        out = np.abs(self.values[~self.mask])
        return float(out.max()) if out.size else 0.0


# --------------------------------------------------------------------------
# the operator L
# --------------------------------------------------------------------------


def _as_full_values(F, grid: CharacteristicGrid) -> np.ndarray:
    if isinstance(F, CharacteristicField):
        if F.grid != grid:
            raise ValueError("field lives on a different lattice")
        if not F.is_full:
            raise ValueError("apply_L needs every lattice row")
        return F.values
    vals = np.asarray(F, dtype=float)
    if vals.shape != (grid.n_rows, grid.n_cols):
        raise ValueError(f"field shape {vals.shape} does not match grid {(grid.n_rows, grid.n_cols)}")
    return vals


def apply_L(F, params: ProblemParams, grid: CharacteristicGrid, weight_exponent: Optional[float] = None) -> CharacteristicField:
    """``L(F)(x,t) = 1/2 int_0^t int_{x-t+s}^{x+t-s} F(y,s) (1+s)^{-(p-1)} dy ds``.

    Second-order lattice quadrature: a vertex rule on the first-row triangle and
    the midpoint rule on every characteristic diamond above it.  Exact for
    ``F (1+s)^{-(p-1)}`` affine.  ``weight_exponent`` overrides ``p - 1``.
    """
    if abs(grid.k / grid.h - grid.K) > 1e-9:
        raise ValueError("grid misaligned with the support radius")
    vals = _as_full_values(F, grid)
    we = float(params.p) - 1.0 if weight_exponent is None else float(weight_exponent)
    G = vals * (1.0 + grid.t)[:, None] ** (-we)
    return CharacteristicField.full(kernels.duhamel(G, grid.h), grid)


def L_direct(F, x: float, t: float, p: float, weight_exponent: Optional[float] = None, tol=1e-11) -> float:
    """Reference value of ``L(F)(x,t)`` by adaptive 2D quadrature of a callable."""
    we = p - 1.0 if weight_exponent is None else weight_exponent
    val, _ = integrate.dblquad(
        lambda y, s: F(y, s) * (1.0 + s) ** (-we),
        0.0,
        t,
        lambda s: x - t + s,
        lambda s: x + t - s,
        epsabs=tol,
        epsrel=tol,
    )
    return 0.5 * val


def L_split(Fr, r: float, t: float, p: float, tol=1e-10):
    """Radial pieces ``(L1, L2)`` of ``L`` for a radial ``F(|y|, s)`` callable."""
    w = lambda s: (1.0 + s) ** (1.0 - p)  # noqa: E731
    L1, _ = integrate.dblquad(
        lambda y, s: Fr(y, s) * w(s), 0.0, t, lambda s: abs(r - t + s), lambda s: r + t - s, epsabs=tol, epsrel=tol
    )
    tr = max(t - r, 0.0)
    if tr > 0:
        L2, _ = integrate.dblquad(lambda y, s: Fr(y, s) * w(s), 0.0, tr, lambda s: 0.0, lambda s: tr - s, epsabs=tol, epsrel=tol)
    else:
        L2 = 0.0
    return 0.5 * L1, L2


# --------------------------------------------------------------------------
# marching
# --------------------------------------------------------------------------


@dataclass
class MarchResult:
    """Outcome of a lattice march.

    ``status`` is ``completed``, ``blew_up`` or ``unresolved``; the diagnostic
    arrays hold, per computed row, ``sup |u|``, ``F = int u dx`` and
    ``S = int |u|^p dx``.
    """

    status: str
    t_blowup: Optional[float]
    field: Optional[CharacteristicField]
    t: np.ndarray
    sup: np.ndarray
    F: np.ndarray
    S: np.ndarray
    h: float
    p: float
    eps: float
    k: float


_STATUS = {kernels.COMPLETED: "completed", kernels.BLEW_UP: "blew_up", kernels.NONFINITE: "unresolved"}


def _store_plan(store, grid):
    if store in ("none", None, False):
        return np.zeros((0, grid.n_cols)), 1
    stride = 1 if store in ("full", True) else int(store)
    n = (grid.n_rows - 1) // stride + 1
    return np.zeros((n, grid.n_cols)), stride


def _first_rows(profile, params, grid, source=True):
    """Rows 0 and 1: exact free part plus a vertex rule on the first triangle."""
    eps, p, h = params.eps, float(params.p), grid.h
    x = grid.x
    row0 = eps * profile.f(x)
    lin1 = eps * dalembert_u0(profile, x, h)
    if source:
        w1 = (1.0 + h) ** (1.0 - p)
        G0 = np.abs(row0) ** p
        G1 = np.abs(lin1) ** p * w1
        corr = np.zeros_like(x)
        corr[1:-1] = h * h / 6.0 * (G0[:-2] + G0[2:] + G1[1:-1])
        row1 = lin1 + corr
    else:
        row1 = lin1
    row0[0] = row0[-1] = row1[0] = row1[-1] = 0.0
    return row0, row1


def diamond_march(
    profile: DataProfile,
    params: ProblemParams,
    grid: CharacteristicGrid,
    blowup_threshold: float = 1e8,
    store="full",
    source: bool = True,
) -> MarchResult:
    """Solve ``u = eps u0 + L(|u|^p)`` row by row on the lattice.

    ``store`` is ``"full"``, ``"none"`` or an integer row stride.  Rows after a
    blow-up are left at zero in the stored field.
    """
    params.require_solver_setting(allowed_mu=(2.0,))
    if abs(profile.k - params.k) > 1e-12 or abs(grid.k - params.k) > 1e-12:
        raise ValueError("profile, params and grid disagree on k")
    row0, row1 = _first_rows(profile, params, grid, source)
    store_arr, stride = _store_plan(store, grid)
    n_end = grid.n_rows - 1
    if n_end < 1:
        raise ValueError("grid needs at least two rows")
    status, last, sup, F, S = kernels.march(
        row0, row1, grid.h, params.p, 1.0 if source else 0.0, grid.c, grid.K, n_end, blowup_threshold, store_arr, stride
    )
    st = _STATUS[status]
    nrow = last + 1
    fld = None
    if store_arr.shape[0]:
        fld = CharacteristicField(store_arr, grid, grid.t[::stride][: store_arr.shape[0]])
    return MarchResult(
        status=st,
        t_blowup=last * grid.h if st == "blew_up" else None,
        field=fld,
        t=grid.t[:nrow],
        sup=sup[:nrow],
        F=F[:nrow],
        S=S[:nrow],
        h=grid.h,
        p=float(params.p),
        eps=params.eps,
        k=params.k,
    )


def find_blowup(profile, params, N, t_max=50.0, t_cap=1e5, threshold=1e8, store="none"):
    """March with a growing horizon until blow-up, non-finite values or ``t_cap``."""
    t = t_max
    while True:
        grid = CharacteristicGrid.for_problem(params.k, N, t)
        res = diamond_march(profile, params, grid, threshold, store=store)
        if res.status != "completed" or t >= t_cap:
            return res
        t = min(2 * t, t_cap)


@dataclass
class ConfirmedBlowup:
    t_coarse: Optional[float]
    t_fine: Optional[float]
    h: float
    confirmed: bool
    status: str
    rel_diff: Optional[float] = None


def confirm_blowup(profile, params, N, t_max=50.0, t_cap=1e5, threshold=1e8, tol=0.05) -> ConfirmedBlowup:
    """Detect blow-up at ``h = k/N`` and ``h/2``; accept when they agree within ``tol``."""
    a = find_blowup(profile, params, N, t_max, t_cap, threshold)
    if a.status != "blew_up":
        return ConfirmedBlowup(None, None, a.h, False, a.status)
    b = find_blowup(profile, params, 2 * N, a.t_blowup * 1.5 + params.k, t_cap, threshold)
    if b.status != "blew_up":
        return ConfirmedBlowup(a.t_blowup, None, a.h, False, "unresolved")
    rel = abs(a.t_blowup - b.t_blowup) / b.t_blowup
    ok = rel < tol
    return ConfirmedBlowup(a.t_blowup, b.t_blowup, a.h, ok, "blew_up" if ok else "unresolved", rel)


# --------------------------------------------------------------------------
# norms
# --------------------------------------------------------------------------


def weighted_norm(V, params: ProblemParams, kind: str = "weighted", T: Optional[float] = None) -> float:
    """Sup over lattice nodes with ``t <= T`` of ``|V|`` or ``w(|x|,t) |V|``.

    A node-based sup, hence a lower bound for the continuum norm.
    """
    vals, t, x = V.values, V.t, V.x
    if T is not None:
        sel = t <= T + 1e-12
        vals, t = vals[sel], t[sel]
    if vals.size == 0:
        return 0.0
    a = np.abs(vals)
    if kind == "plain":
        return float(a.max())
    if kind != "weighted":
        raise ValueError(f"unknown norm kind {kind!r}")
    w = weight_w(np.abs(x)[None, :], t[:, None], params)
    return float((w * a).max())


def _running_weighted_sup(vals, grid, params):
    w = weight_w(np.abs(grid.x)[None, :], grid.t[:, None], params)
    return np.maximum.accumulate(np.max(w * np.abs(vals), axis=1))


# --------------------------------------------------------------------------
# Picard iteration for U = L(|eps u0 + U|^p)
# --------------------------------------------------------------------------


@dataclass
class PicardReport:
    iterations: int
    increments: list
    ratios: list
    converged: bool
    contracting: bool
    reason: str


def picard_solve(profile, params, grid, tol=1e-12, max_iter=100):
    """Fixed-point iteration ``U_1 = 0``, ``U_l = L(|eps u0 + U_{l-1}|^p)``.

    Returns the solution field ``u = eps u0 + U`` and a report with the
    weighted-norm increments.  Growth of the increments over five
    consecutive iterations stops the loop as non-contraction.
    """
    params.require_solver_setting(allowed_mu=(2.0,))
    lin = params.eps * grid.sample(lambda X, T: dalembert_u0(profile, X, T))
    lin[:, 0] = lin[:, -1] = 0.0
    U = np.zeros_like(lin)
    incs, ratios = [], []
    converged, contracting, reason = False, True, "max_iter"
    grow = 0
    p = float(params.p)
    for it in range(1, max_iter + 1):
        with np.errstate(over="ignore", invalid="ignore"):
            Unew = apply_L(np.abs(lin + U) ** p, params, grid).values
        if not np.all(np.isfinite(Unew)):
            contracting, reason = False, "non-finite iterate"
            break
        inc = weighted_norm(CharacteristicField.full(Unew - U, grid), params)
        nrm = weighted_norm(CharacteristicField.full(Unew, grid), params)
        if incs:
            ratios.append(inc / incs[-1] if incs[-1] > 0 else 0.0)
            grow = grow + 1 if ratios[-1] > 1 else 0
        incs.append(inc)
        U = Unew
        if inc <= tol * nrm:
            converged, reason = True, "tolerance"
            break
        if grow >= 5:
            contracting, reason = False, "increments grew over 5 consecutive iterations"
            break
    report = PicardReport(it, incs, ratios, converged, contracting, reason)
    return CharacteristicField.full(lin + U, grid), report


# --------------------------------------------------------------------------
# empirical a-priori estimates
# --------------------------------------------------------------------------


@dataclass
class WeightReport:
    which: str
    T: np.ndarray
    sup: np.ndarray
    bound_form: np.ndarray
    constants: np.ndarray
    fitted_exponent: Optional[float]
    fitted_stderr: Optional[float]
    theoretical_exponent: Optional[float]
    skipped: bool = False
    notes: list = field(default_factory=list)

    @property
    def empirical_constant(self) -> float:
        return float(np.max(self.constants)) if len(self.constants) else float("nan")

    @property
    def relative_deviation(self) -> Optional[float]:
        if self.fitted_exponent is None or not self.theoretical_exponent:
            return None
        return abs(self.fitted_exponent - self.theoretical_exponent) / abs(self.theoretical_exponent)


def _slope(xs, ys):
    A = np.vstack([xs, np.ones_like(xs)]).T
    coef, res, *_ = np.linalg.lstsq(A, ys, rcond=None)
    n = len(xs)
    if n > 2:
        resid = ys - A @ coef
        s2 = resid @ resid / (n - 2)
        cov = s2 * np.linalg.inv(A.T @ A)
        se = float(math.sqrt(max(cov[0, 0], 0.0)))
    else:
        se = float("nan")
    return float(coef[0]), se


def main_growth_exponent(p) -> float:
    """Power of ``T_k`` in the growth factor of the main estimate (p != 3)."""
    if _cmp(p, 2) > 0:
        return 3.0 - float(p)
    if _cmp(p, 2) == 0:
        return 1.0  # after dividing out the log factor
    return gamma(float(p), 3) / 2


def verify_apriori(which: str, params: ProblemParams, T_list: Sequence[float], N: int = 8, profile: Optional[DataProfile] = None) -> WeightReport:
    """Empirical check of the weighted a-priori estimates on a lattice.

    ``linear_31``: sup |u0| against ``||f||_inf + ||f+g||_1``.
    ``annulus_32``: sup w |L(chi_annulus)| against ``k^2``.
    ``main_33``: sup w |L(w^-p chi_cone)| against ``k^2 D(T)``; growth fitted in ``T_k``.
    ``mixed_34``: sup w |L(chi_annulus / w)| against ``k^2 D(T)^(1/p)``.
    """
    T_arr = np.asarray(sorted(T_list), dtype=float)
    if np.any(np.diff(T_arr) <= 0):
        raise ValueError("T_list must be strictly increasing")
    k, p = params.k, float(params.p)
    grid = CharacteristicGrid.for_problem(k, N, float(T_arr[-1]))
    x, t = grid.x, grid.t
    r = np.abs(x)[None, :]
    tt = t[:, None]
    cone = r <= tt + k + 1e-12
    annulus = cone & (r >= tt - k - 1e-12)
    w = weight_w(r, tt, params)
    Tk = (T_arr + 2 * k) / k
    idx = np.minimum(np.round(T_arr / grid.h).astype(int), grid.n_rows - 1)
    notes = []

    if which == "linear_31":
        prof = profile or DataProfile(k=k)
        if not prof.zero_moment:
            notes.append("data without zero moment: bound not expected to hold uniformly")
        u0 = np.abs(grid.sample(lambda X, T: dalembert_u0(prof, X, T)))
        run = np.maximum.accumulate(u0.max(axis=1))[idx]
        bound = np.full_like(run, prof.f_sup + prof.fg_l1)
        return WeightReport(which, T_arr, run, bound, run / bound, None, None, None, notes=notes)

    if which == "annulus_32" and profile is not None and not profile.zero_moment:
        return WeightReport(which, T_arr, np.array([]), np.array([]), np.array([]), None, None, None, skipped=True,
                            notes=["free solution fills the cone: annulus estimate not applicable"])

    if which == "annulus_32":
        F = annulus.astype(float)
        bound = np.full(len(T_arr), k * k)
        theo = 0.0 if weight_kind(p) is WeightKind.UNIT else None
    elif which == "main_33":
        F = np.where(cone, w ** (-p), 0.0)
        bound = k * k * np.asarray(growth_D(T_arr, params))
        theo = None if _cmp(p, 3) == 0 else main_growth_exponent(p)
    elif which == "mixed_34":
        F = np.where(annulus, 1.0 / w, 0.0)
        bound = k * k * np.asarray(growth_D(T_arr, params)) ** (1.0 / p)
        theo = None
    else:
        raise ValueError(f"unknown estimate {which!r}")

    L = apply_L(F, params, grid).values
    run = _running_weighted_sup(L, grid, params)[idx]
    y = np.log(run)
    if which == "main_33" and _cmp(p, 2) == 0:
        y = y - np.log(np.log(Tk))
    slope, se = _slope(np.log(Tk), y) if len(T_arr) >= 2 else (None, None)
    return WeightReport(which, T_arr, run, bound, run / bound, slope, se, theo, notes=notes)


# --------------------------------------------------------------------------
# weight interpolation inequality
# --------------------------------------------------------------------------


def interpolation_bound_check(theta, alpha, beta, k):
    """Whether ``1/(1+s) <= 4 / ({(a+2k)/k}^th {(b+2k)/k}^(1-th))`` with ``s=(a+b)/2``.

    Vectorised; inputs must satisfy ``a >= 0``, ``b >= -k``, ``s >= 0`` and
    ``k > 1`` (the support radius assumption; the bound fails for small ``k``).
    """
    theta, alpha, beta, k = (np.asarray(v, dtype=float) for v in (theta, alpha, beta, k))
    if np.any(k <= 1) or np.any(alpha < 0) or np.any(beta < -k) or np.any(alpha + beta < 0) or np.any((theta < 0) | (theta > 1)):
        raise ValueError("inputs outside the admissible set")
    s = 0.5 * (alpha + beta)
    lhs = 1.0 / (1.0 + s)
    rhs = 4.0 / (((alpha + 2 * k) / k) ** theta * ((beta + 2 * k) / k) ** (1.0 - theta))
    out = lhs <= rhs * (1.0 + 1e-12)
    return bool(out) if out.ndim == 0 else out
