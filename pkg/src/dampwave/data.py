"""Compactly supported initial data, the free solution and the Liouville map."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate

KINDS = ("poly_bump", "cosine_bump")
MODES = ("thm22", "zero_moment_general", "free")


# f on |x| <= 1 and its antiderivative F with F(-1) = 0
def _poly(x):
    y = np.clip(x, -1.0, 1.0)
    return np.where(np.abs(x) < 1.0, (1.0 - y * y) ** 3, 0.0)


def _poly_anti(x):
    y = np.clip(x, -1.0, 1.0)
    P = lambda z: z - z**3 + 0.6 * z**5 - z**7 / 7.0  # noqa: E731
    return P(y) - P(-1.0)


def _cos(x):
    y = np.clip(x, -1.0, 1.0)
    return np.where(np.abs(x) < 1.0, (0.5 * (1.0 + np.cos(np.pi * y))) ** 2, 0.0)


def _cos_anti(x):
    y = np.clip(x, -1.0, 1.0)
    P = lambda z: 0.25 * (1.5 * z + 2 * np.sin(np.pi * z) / np.pi + np.sin(2 * np.pi * z) / (4 * np.pi))  # noqa: E731
    return P(y) - P(-1.0)


# odd C^1 bump with zero integral, and its antiderivative (vanishing off [-1, 1])
def _odd(x):
    y = np.clip(x, -1.0, 1.0)
    return np.where(np.abs(x) < 1.0, y * (1.0 - y * y) ** 2, 0.0)


def _odd_anti(x):
    y = np.clip(x, -1.0, 1.0)
    return -((1.0 - y * y) ** 3) / 6.0


_SHAPES = {
    "poly_bump": (_poly, _poly_anti, 32.0 / 35.0),
    "cosine_bump": (_cos, _cos_anti, 0.75),
}


@dataclass(frozen=True)
class DataProfile:
    """Initial pair ``(f, g)`` supported in ``|x| <= width < k``.

    ``mode`` fixes ``g``: ``thm22`` takes ``g = -f``; ``zero_moment_general``
    takes ``g = -f + h`` with an odd bump ``h``; ``free`` takes ``g = 0``.
    """

    kind: str = "poly_bump"
    k: float = 2.0
    mode: str = "thm22"
    amplitude: float = 1.0
    width: float = 1.0
    _custom: Optional[tuple] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if not self.k > 1:
            raise ValueError(f"support radius k must exceed 1, got {self.k}")
        if self._custom is None:
            if self.kind not in KINDS:
                raise ValueError(f"unknown profile kind {self.kind!r}")
            if self.mode not in MODES:
                raise ValueError(f"unknown mode {self.mode!r}")
        if not 0 < self.width <= self.k:
            raise ValueError("data support must sit inside [-k, k]")

    @classmethod
    def custom(cls, f: Callable, g: Callable, k: float, width: float):
        """Profile from arbitrary vectorised callables (moments by quadrature)."""
        return cls(kind="custom", k=k, mode="custom", width=width, _custom=(f, g))

    # -- pointwise data -------------------------------------------------
    def f(self, x):
        x = np.asarray(x, dtype=float)
        if self._custom is not None:
            return np.asarray(self._custom[0](x), dtype=float)
        return self.amplitude * _SHAPES[self.kind][0](x / self.width)

    def g(self, x):
        x = np.asarray(x, dtype=float)
        if self._custom is not None:
            return np.asarray(self._custom[1](x), dtype=float)
        if self.mode == "thm22":
            return -self.f(x)
        if self.mode == "zero_moment_general":
            return -self.f(x) + self.amplitude * _odd(x / self.width)
        return np.zeros_like(x)

    def f_plus_g(self, x):
        x = np.asarray(x, dtype=float)
        if self._custom is not None:
            return self.f(x) + self.g(x)
        if self.mode == "thm22":
            return np.zeros_like(x)
        if self.mode == "zero_moment_general":
            return self.amplitude * _odd(x / self.width)
        return self.f(x)

    def antiderivative_fg(self, x):
        """``int_{-inf}^x (f+g) dy``; closed form for built-in kinds."""
        x = np.asarray(x, dtype=float)
        if self._custom is not None:
            lo = -self.width
            vec = np.vectorize(
                lambda b: integrate.quad(self.f_plus_g, lo, min(max(b, lo), self.width), epsabs=1e-13, epsrel=1e-13, limit=200)[0]
                if b > lo
                else 0.0
            )
            return vec(x)
        w, a = self.width, self.amplitude
        if self.mode == "thm22":
            return np.zeros_like(x)
        if self.mode == "zero_moment_general":
            return a * w * _odd_anti(x / w)
        return a * w * _SHAPES[self.kind][1](x / w)

    # -- moments ---------------------------------------------------------
    @property
    def f_l1(self) -> float:
        """``||f||_1``."""
        if self._custom is not None:
            return integrate.quad(lambda x: abs(float(self.f(x))), -self.width, self.width, epsabs=1e-13, limit=200)[0]
        return abs(self.amplitude) * self.width * _SHAPES[self.kind][2]

    @property
    def f_sup(self) -> float:
        xs = np.linspace(-self.width, self.width, 4001)
        return float(np.max(np.abs(self.f(xs))))

    @property
    def total_moment(self) -> float:
        """``int (f + g) dx``."""
        if self._custom is not None:
            return integrate.quad(self.f_plus_g, -self.width, self.width, epsabs=1e-14, limit=200)[0]
        if self.mode == "free":
            return self.f_l1 * math.copysign(1.0, self.amplitude)
        return 0.0

    @property
    def fg_l1(self) -> float:
        """``||f + g||_1``."""
        return integrate.quad(lambda x: abs(float(self.f_plus_g(x))), -self.width, self.width, epsabs=1e-13, limit=200)[0]

    def f_power_integral(self, p: float) -> float:
        """``int |f|^p dx`` by adaptive quadrature."""
        return integrate.quad(lambda x: abs(float(self.f(x))) ** p, -self.width, self.width, epsabs=1e-14, epsrel=1e-12, limit=200)[0]

    @property
    def zero_moment(self) -> bool:
        return abs(self.total_moment) <= 1e-12

    @property
    def thm22(self) -> bool:
        """Sign hypotheses of the blow-up theorem: ``f >= 0``, ``f != 0``, ``g = -f``."""
        if self._custom is None:
            return self.mode == "thm22" and self.amplitude > 0
        xs = np.linspace(-self.k, self.k, 4001)
        fx = self.f(xs)
        return bool(np.all(fx >= 0) and fx.max() > 0 and np.allclose(self.g(xs), -fx, atol=1e-14))

    @property
    def flags(self) -> dict:
        return {"zero_moment": self.zero_moment, "thm22": self.thm22}

    def to_dict(self) -> dict:
        if self._custom is not None:
            raise ValueError("custom profiles cannot be serialised")
        return {"kind": self.kind, "k": self.k, "mode": self.mode, "amplitude": self.amplitude}

    @classmethod
    def from_dict(cls, d: dict) -> "DataProfile":
        return cls(
            kind=d.get("kind", "poly_bump"),
            k=float(d.get("k", 2.0)),
            mode=d.get("mode", "thm22"),
            amplitude=float(d.get("amplitude", 1.0)),
        )


def make_bump_pair(kind="poly_bump", k=2.0, mode="thm22") -> DataProfile:
    return DataProfile(kind=kind, k=k, mode=mode)


def dalembert_u0(profile: DataProfile, x, t):
    """Free solution with ``u0(x,0) = f`` and ``u0_t(x,0) = f + g``."""
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be nonnegative")
    xp, xm = x + t, x - t
    out = 0.5 * (profile.f(xp) + profile.f(xm))
    if not (profile._custom is None and profile.mode == "thm22"):
        out = out + 0.5 * (profile.antiderivative_fg(xp) - profile.antiderivative_fg(xm))
    return out if out.ndim else float(out)


@dataclass
class SupportReport:
    ok: bool
    checked: int
    worst_value: float
    worst_point: Optional[tuple]


def check_support_u0(profile: DataProfile, xs, ts, tol=1e-12) -> SupportReport:
    """Check that ``u0`` vanishes off the annulus ``t-k <= |x| <= t+k``."""
    if not profile.zero_moment:
        raise ValueError("support check requires data with zero total moment")
    X, T = np.meshgrid(np.asarray(xs, float), np.asarray(ts, float))
    r = np.abs(X)
    outside = (r < T - profile.k) | (r > T + profile.k)
    if not outside.any():
        return SupportReport(True, 0, 0.0, None)
    vals = np.abs(dalembert_u0(profile, X[outside], T[outside]))
    i = int(np.argmax(vals))
    worst = float(vals[i])
    return SupportReport(
        ok=worst <= tol,
        checked=int(outside.sum()),
        worst_value=worst,
        worst_point=(float(X[outside][i]), float(T[outside][i])),
    )


def liouville_forward(v, t, mu):
    """``u = (1+t)^{mu/2} v``."""
    return (1.0 + np.asarray(t)) ** (0.5 * mu) * v


def liouville_backward(u, t, mu):
    return u / (1.0 + np.asarray(t)) ** (0.5 * mu)


def liouville_initial_speed(profile: DataProfile, x, mu, eps=1.0):
    """Initial speed of the transformed problem, ``eps (mu f/2 + g)``."""
    return eps * (0.5 * mu * profile.f(x) + profile.g(x))
