"""Leapfrog finite differences for the damped problem and its Liouville form.

``solve_ivp1`` integrates ``v_tt - v_xx + mu/(1+t) v_t = |v|^p`` directly.
``solve_ivp2`` integrates the transformed equation for ``u = (1+t)^{mu/2} v``::

    u_tt - u_xx + mu(2-mu)/(4(1+t)^2) u = |u|^p / (1+t)^{mu(p-1)/2}

Both use a uniform grid with ``dt = cfl * dx``, centred damping (so the
update stays explicit), a Taylor first step and Dirichlet zero edges placed
outside the light cone.  This module is a validation tool for the lattice
solver in :mod:`dampwave.duhamel`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .data import DataProfile, liouville_forward
from .duhamel import CharacteristicGrid, diamond_march
from .exponents import ProblemParams

CFL_MAX = 0.9


@dataclass(frozen=True)
class UniformGrid:
    """Grid on ``[-X, X] x [0, t_max]`` with ``dt = cfl dx``."""

    dx: float
    dt: float
    X: float
    t_max: float
    k: float = 2.0

    def __post_init__(self):
        if not (self.dx > 0 and self.dt > 0):
            raise ValueError("dx and dt must be positive")
        if not 0 < self.cfl <= CFL_MAX + 1e-12:
            raise ValueError(f"CFL number {self.cfl:.4g} outside (0, {CFL_MAX}]")
        for name, step in (("X", self.dx), ("t_max", self.dt)):
            q = getattr(self, name) / step
            if abs(q - round(q)) > 1e-9:
                raise ValueError(f"{name} is not a multiple of its spacing")
        if self.X < self.t_max + self.k + 1 - 1e-12:
            raise ValueError("X must reach t_max + k + 1 so the edges stay outside the cone")

    @classmethod
    def for_problem(cls, k: float, N: int, t_max: float, cfl: float = 0.5) -> "UniformGrid":
        """``dx = k/N`` and a time step of ``cfl dx``; ``t_max`` rounded up to a step."""
        dx = k / N
        dt = cfl * dx
        nt = int(math.ceil(t_max / dt - 1e-9))
        # leapfrog leaks exponentially small tails ahead of the cone; 24 cells
        # keep them below 1e-13 at the edges
        nx = int(math.ceil((nt * dt + k + max(1.0, 24 * dx)) / dx - 1e-9))
        return cls(dx=dx, dt=dt, X=nx * dx, t_max=nt * dt, k=k)

    @property
    def cfl(self) -> float:
        return self.dt / self.dx

    @property
    def n_steps(self) -> int:
        return int(round(self.t_max / self.dt))

    @property
    def c(self) -> int:
        return int(round(self.X / self.dx))

    @property
    def x(self) -> np.ndarray:
        return (np.arange(2 * self.c + 1) - self.c) * self.dx

    @property
    def t(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.dt


@dataclass
class FDState:
    """Three consecutive time levels and the index of the newest one."""

    prev: np.ndarray
    cur: np.ndarray
    nxt: np.ndarray
    n: int

    def __post_init__(self):
        if not (self.prev.shape == self.cur.shape == self.nxt.shape):
            raise ValueError("time levels must have equal length")
        if self.n < 0:
            raise ValueError("time index must be nonnegative")


@dataclass
class FDResult:
    """Stored levels and per-step diagnostics, in the layout of ``MarchResult``."""

    status: str
    t_blowup: Optional[float]
    values: np.ndarray
    t_stored: np.ndarray
    x: np.ndarray
    t: np.ndarray
    sup: np.ndarray
    F: np.ndarray
    S: np.ndarray
    grid: UniformGrid
    p: float
    eps: float
    k: float
    equation: str

    @property
    def h(self) -> float:
        return self.grid.dx

    @property
    def boundary_max(self) -> float:
        """Largest value in the two columns next to the Dirichlet edges."""
        if not self.values.size:
            return 0.0
        return float(np.abs(self.values[:, [1, -2]]).max())

    def state(self) -> FDState:
        """The last three stored levels (only meaningful for a full store)."""
        if self.values.shape[0] < 3:
            raise ValueError("need three stored levels")
        n = len(self.t_stored) - 1
        return FDState(self.values[-3].copy(), self.values[-2].copy(), self.values[-1].copy(), n)

    def at(self, t: float) -> np.ndarray:
        i = int(np.argmin(np.abs(self.t_stored - t)))
        if abs(self.t_stored[i] - t) > 1e-9 * max(1.0, t):
            raise KeyError(f"time {t} was not stored")
        return self.values[i]


_STATUS = {kernels.COMPLETED: "completed", kernels.BLEW_UP: "blew_up", kernels.NONFINITE: "unresolved"}


def _d2(v, dx):
    out = np.zeros_like(v)
    out[1:-1] = (v[2:] - 2.0 * v[1:-1] + v[:-2]) / dx**2
    return out


def _run(v0, vt, grid, p, damp, mass, src, threshold, store, eps, k, equation):
    """Taylor first step, then the leapfrog kernel."""
    dt, dx = grid.dt, grid.dx
    v0 = np.array(v0, dtype=float)
    vt = np.array(vt, dtype=float)
    v0[0] = v0[-1] = vt[0] = vt[-1] = 0.0
    acc0 = _d2(v0, dx) - damp(0.0) * vt - mass(0.0) * v0 + src(0.0) * kernels._powabs_np(v0, p)
    v1 = v0 + dt * vt + 0.5 * dt * dt * acc0
    v1[0] = v1[-1] = 0.0
    n_end = grid.n_steps
    tn = np.arange(n_end + 1) * dt
    a = np.array([0.5 * dt * damp(s) for s in tn])
    m = np.array([mass(s) for s in tn])
    s = np.array([src(s) for s in tn])
    if store in ("none", None, False):
        arr, stride = np.zeros((0, v0.size)), 1
    else:
        stride = 1 if store in ("full", True) else int(store)
        arr = np.zeros((n_end // stride + 1, v0.size))
    status, last, sup, F, S = kernels.leapfrog(v0, v1, dx, dt, p, a, m, s, n_end, threshold, arr, stride)
    st = _STATUS[status]
    nrow = last + 1
    nkept = min(arr.shape[0], last // stride + 1)
    return FDResult(
        status=st,
        t_blowup=last * dt if st == "blew_up" else None,
        values=arr[:nkept],
        t_stored=(np.arange(nkept) * stride * dt),
        x=grid.x,
        t=tn[:nrow],
        sup=sup[:nrow],
        F=F[:nrow],
        S=S[:nrow],
        grid=grid,
        p=float(p),
        eps=eps,
        k=k,
        equation=equation,
    )


def solve_ivp1(profile: DataProfile, params: ProblemParams, grid: UniformGrid, threshold: float = 1e8, store="full", source: bool = True) -> FDResult:
    """Damped equation for ``v`` with data ``(eps f, eps g)``."""
    if params.mu < 0:
        raise ValueError("mu must be nonnegative")
    mu, eps, p = params.mu, params.eps, float(params.p)
    x = grid.x
    return _run(
        eps * profile.f(x),
        eps * profile.g(x),
        grid,
        p,
        damp=lambda t: mu / (1.0 + t),
        mass=lambda t: 0.0,
        src=lambda t: 1.0 if source else 0.0,
        threshold=threshold,
        store=store,
        eps=eps,
        k=params.k,
        equation="ivp1",
    )


def mass_coefficient(mu: float) -> float:
    """``mu(2-mu)/4``; the potential is this over ``(1+t)^2``."""
    return mu * (2.0 - mu) / 4.0


def solve_ivp2(profile: DataProfile, params: ProblemParams, grid: UniformGrid, threshold: float = 1e8, store="full", source: bool = True) -> FDResult:
    """Liouville-transformed equation for ``u`` with speed ``eps(mu f/2 + g)``."""
    if params.mu < 0:
        raise ValueError("mu must be nonnegative")
    mu, eps, p = params.mu, params.eps, float(params.p)
    mc = mass_coefficient(mu)
    e = mu * (p - 1.0) / 2.0
    x = grid.x
    return _run(
        eps * profile.f(x),
        eps * (0.5 * mu * profile.f(x) + profile.g(x)),
        grid,
        p,
        damp=lambda t: 0.0,
        mass=lambda t: mc / (1.0 + t) ** 2,
        src=lambda t: (1.0 + t) ** (-e) if source else 0.0,
        threshold=threshold,
        store=store,
        eps=eps,
        k=params.k,
        equation="ivp2",
    )


def liouville_roundtrip_error(profile: DataProfile, params: ProblemParams, grid: UniformGrid) -> float:
    """``sup |(1+t)^{mu/2} v - u|`` over all levels, ``v`` from ivp1 and ``u`` from ivp2."""
    v = solve_ivp1(profile, params, grid)
    u = solve_ivp2(profile, params, grid)
    n = min(len(v.t_stored), len(u.t_stored))
    tv = v.t_stored[:n, None]
    return float(np.abs(liouville_forward(v.values[:n], tv, params.mu) - u.values[:n]).max())


def reversal_error(v0, v1, dx: float, dt: float, n_steps: int) -> float:
    """March the bare leapfrog core forward ``n_steps``, then back; return the data error."""
    z = np.zeros(n_steps + 1)
    store = np.zeros((n_steps + 1, len(v0)))
    kernels.leapfrog(v0, v1, dx, dt, 2.0, z, z, z, n_steps, np.inf, store, 1)
    back = np.zeros_like(store)
    kernels.leapfrog(store[-1], store[-2], dx, dt, 2.0, z, z, z, n_steps, np.inf, back, 1)
    return float(max(np.abs(back[-1] - v0).max(), np.abs(back[-2] - v1).max()))


# --------------------------------------------------------------------------
# refinement studies
# --------------------------------------------------------------------------


@dataclass
class ConvergenceReport:
    order: float
    resolutions: list
    differences: list
    monotone: bool
    ok: bool

    def __float__(self):
        return self.order


def _snapshot(solver, profile, params, N, T, cfl):
    """Values at time ``T`` on the points ``x = j k / N0``-compatible grid of resolution N."""
    if solver == "diamond":
        grid = CharacteristicGrid.for_problem(params.k, N, T)
        res = diamond_march(profile, params, grid, store="full")
        row = int(round(T / grid.h))
        return grid.x, res.field.values[row]
    if solver in ("fd", "ivp2"):
        grid = UniformGrid.for_problem(params.k, N, T, cfl)
        return grid.x, solve_ivp2(profile, params, grid).at(T)
    if solver == "ivp1":
        grid = UniformGrid.for_problem(params.k, N, T, cfl)
        return grid.x, solve_ivp1(profile, params, grid).at(T)
    raise ValueError(f"unknown solver {solver!r}")


def convergence_order(solver: str, profile: DataProfile, params: ProblemParams, resolutions: Sequence[int], T: float = 1.0, cfl: float = 0.5) -> ConvergenceReport:
    """Order from successive refinements ``N_i -> N_{i+1}`` (doubling) at time ``T``.

    Differences are sup norms on the coarsest grid's points over a common
    window inside ``|x| <= T + k + 1``.  The order is the least-squares slope of
    ``log diff`` against ``log h``.
    """
    res = sorted(int(n) for n in resolutions)
    if len(res) < 3:
        raise ValueError("need at least three resolutions")
    if any(b != 2 * a for a, b in zip(res, res[1:])):
        raise ValueError("resolutions must double")
    snaps = [_snapshot(solver, profile, params, N, T, cfl) for N in res]
    xw = min([T + params.k + 1] + [float(s[0][-1]) for s in snaps])
    xs0 = snaps[0][0]
    pts = xs0[np.abs(xs0) <= xw + 1e-12]

    def on(s):
        x, v = s
        idx = np.searchsorted(x, pts - 1e-9 * (x[1] - x[0]))
        return v[idx]

    vals = [on(s) for s in snaps]
    diffs = [float(np.abs(a - b).max()) for a, b in zip(vals, vals[1:])]
    hs = np.array([params.k / n for n in res[:-1]])
    d = np.array(diffs)
    if np.all(d > 0):
        order = float(np.polyfit(np.log(hs), np.log(d), 1)[0])
    else:
        order = float("inf")
    mono = bool(np.all(np.diff(d) < 0))
    return ConvergenceReport(order, res, diffs, mono, order >= 1.0 and mono)


# --------------------------------------------------------------------------
# blow-up detection
# --------------------------------------------------------------------------


def find_blowup_fd(profile, params, N, t_max=50.0, t_cap=1e5, threshold=1e8, equation="ivp2", cfl=0.5) -> FDResult:
    """Run with a doubling horizon until blow-up, non-finite values or ``t_cap``."""
    solve = solve_ivp2 if equation == "ivp2" else solve_ivp1
    t = t_max
    while True:
        grid = UniformGrid.for_problem(params.k, N, t, cfl)
        res = solve(profile, params, grid, threshold, store="none")
        if res.status != "completed" or t >= t_cap:
            return res
        t = min(2 * t, t_cap)


def confirm_blowup_fd(profile, params, N, t_max=50.0, t_cap=1e5, threshold=1e8, tol=0.05, cfl=0.5):
    """``h`` versus ``h/2`` confirmation, mirroring :func:`dampwave.duhamel.confirm_blowup`."""
    from .duhamel import ConfirmedBlowup

    a = find_blowup_fd(profile, params, N, t_max, t_cap, threshold, cfl=cfl)
    if a.status != "blew_up":
        return ConfirmedBlowup(None, None, a.h, False, a.status)
    b = find_blowup_fd(profile, params, 2 * N, a.t_blowup * 1.5 + params.k, t_cap, threshold, cfl=cfl)
    if b.status != "blew_up":
        return ConfirmedBlowup(a.t_blowup, None, a.h, False, "unresolved")
    rel = abs(a.t_blowup - b.t_blowup) / b.t_blowup
    ok = rel < tol
    return ConfirmedBlowup(a.t_blowup, b.t_blowup, a.h, ok, "blew_up" if ok else "unresolved", rel)
