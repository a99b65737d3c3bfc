"""Lifespan sweeps over amplitude, scaling fits and output files."""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .data import DataProfile
from .duhamel import confirm_blowup
from .exponents import Form, ProblemParams, Reference, predicted_lifespan, solve_b
from .fd import confirm_blowup_fd
from .functional import LifespanRecord, ode_comparison_lifespan
from . import storage

SOLVERS = ("diamond", "fd", "ode")
MODELS = ("power", "b_eps", "exponential")


class FitError(ValueError):
    """Not enough usable records, or a degenerate design."""


@dataclass
class ExperimentConfig:
    """Everything a sweep needs; every field has a default."""

    p: float = 2.0
    mu: float = 2.0
    k: float = 2.0
    n: int = 1
    kind: str = "poly_bump"
    mode: str = "thm22"
    solver: str = "ode"
    eps: list = field(default_factory=lambda: [1e-1, 1e-2, 1e-3, 1e-4])
    resolutions: list = field(default_factory=lambda: [16])
    threshold: float = 1e8
    t_max: float = 50.0
    t_cap: float = 1e5
    confirm_tol: float = 0.05
    ode_method: str = "RK45"
    model: Optional[str] = None
    tolerance: float = 0.1
    out: str = "out"
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.solver not in SOLVERS:
            raise ValueError(f"solver must be one of {SOLVERS}")
        if any(not e > 0 for e in self.eps):
            raise ValueError("amplitudes must be positive")
        self.eps = sorted((float(e) for e in self.eps), reverse=True)
        for N in self.resolutions:
            if N < 1 or int(N) & (int(N) - 1):
                raise ValueError(f"resolution {N} is not a power of two")
        self.resolutions = [int(N) for N in self.resolutions]
        if self.model is not None and self.model not in MODELS:
            raise ValueError(f"model must be one of {MODELS}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")
        self.params  # validates p, mu, k
        self.profile

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown config keys: {sorted(extra)}")
        return cls(**d)

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        return cls.from_dict(storage.load_config(path))

    def to_dict(self) -> dict:
        return asdict(self)

    @property
    def params(self) -> ProblemParams:
        return ProblemParams(p=self.p, n=self.n, mu=self.mu, k=self.k)

    @property
    def profile(self) -> DataProfile:
        return DataProfile(kind=self.kind, k=self.k, mode=self.mode)

    @property
    def default_model(self) -> str:
        return {Form.POWER: "power", Form.B_EPS: "b_eps", Form.EXPONENTIAL: "exponential"}[
            predicted_lifespan(1.0, self.params).form
        ]


# --------------------------------------------------------------------------
# sweeps
# --------------------------------------------------------------------------


def _run_one(cfg: ExperimentConfig, eps: float, N: Optional[int]) -> LifespanRecord:
    t0 = time.perf_counter()
    params = cfg.params.with_eps(eps)
    h = None if N is None else cfg.k / N
    try:
        if cfg.solver == "ode":
            rec = ode_comparison_lifespan(eps, params, profile=cfg.profile, method=cfg.ode_method)
            return rec
        confirm = confirm_blowup if cfg.solver == "diamond" else confirm_blowup_fd
        cb = confirm(cfg.profile, params, N, cfg.t_max, cfg.t_cap, cfg.threshold, cfg.confirm_tol)
        if cb.status == "completed":
            status, t = "no_blowup", None
        else:
            status, t = cb.status, cb.t_coarse if cb.confirmed else None
        return LifespanRecord(
            eps=eps,
            p=float(cfg.p),
            solver=cfg.solver,
            t_blowup=t,
            log_t_blowup=None if t is None else math.log(t),
            status=status,
            h=h,
            confirmed=cb.confirmed,
            walltime=time.perf_counter() - t0,
        )
    except Exception:  # a failed run never aborts the sweep
        return LifespanRecord(eps, float(cfg.p), cfg.solver, None, None, "unresolved", h, False, time.perf_counter() - t0)


def _task(args):
    return _run_one(*args)


def run_sweep(cfg: ExperimentConfig, workers: Optional[int] = None) -> list:
    """One record per (eps, resolution), sorted by ``(eps, h)``.

    The ODE surrogate has no grid, so it yields one record per amplitude with
    ``h = None``.
    """
    Ns = [None] if cfg.solver == "ode" else list(cfg.resolutions)
    tasks = [(cfg, e, N) for e in cfg.eps for N in Ns]
    workers = cfg.workers if workers is None else workers
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            recs = list(ex.map(_task, tasks))
    else:
        recs = [_task(t) for t in tasks]
    return sorted(recs, key=lambda r: (r.eps, -1.0 if r.h is None else r.h))


# --------------------------------------------------------------------------
# fits
# --------------------------------------------------------------------------


@dataclass
class ScalingFit:
    model: str
    exponent: float
    stderr: float
    intercept: float
    theory: Optional[float]
    rel_deviation: Optional[float]
    n: int
    p: float
    solver: str
    eps_range: tuple
    ratio_spread: Optional[float] = None  # max/min of T/b(eps) for the b_eps model

    def to_dict(self) -> dict:
        return asdict(self)


def usable(records) -> list:
    return [r for r in records if r.status == "blew_up" and r.confirmed and r.log_t_blowup is not None]


def _linfit(x, y):
    x, y = np.asarray(x, float), np.asarray(y, float)
    n = x.size
    if np.ptp(x) == 0:
        raise FitError("degenerate design: all abscissae coincide")
    A = np.column_stack([x, np.ones(n)])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    r = y - A @ coef
    s2 = float(r @ r) / (n - 2) if n > 2 else 0.0
    cov = s2 * np.linalg.inv(A.T @ A)
    return float(coef[0]), float(coef[1]), math.sqrt(max(cov[0, 0], 0.0))


def fit_exponent(records, model: str, min_records: int = 4) -> ScalingFit:
    """Least squares in the model's linear coordinates.

    ``power``: ``log T`` against ``log(1/eps)``.
    ``b_eps``: ``T`` against ``b(eps)`` through the origin.
    ``exponential``: ``log log T`` against ``log(1/eps)``; ODE records only.
    """
    if model not in MODELS:
        raise ValueError(f"unknown model {model!r}")
    rs = usable(records)
    if len(rs) < min_records:
        raise FitError(f"need at least {min_records} resolved, confirmed records, got {len(rs)}")
    solvers = {r.solver for r in rs}
    ps = {r.p for r in rs}
    if len(ps) != 1:
        raise FitError("records mix several exponents p")
    if model == "exponential" and solvers != {"ode"}:
        raise FitError("exponential lifespans are out of reach for the PDE solvers; use the ODE surrogate")
    p = ps.pop()
    eps = np.array([r.eps for r in rs])
    lt = np.array([r.log_t_blowup for r in rs])
    x = np.log(1.0 / eps)
    spread = None
    if model == "power":
        slope, icpt, se = _linfit(x, lt)
    elif model == "exponential":
        if np.any(lt <= 0):
            raise FitError("exponential model needs T > 1")
        slope, icpt, se = _linfit(x, np.log(lt))
    else:
        b = np.array([solve_b(e) for e in eps])
        T = np.exp(lt)
        slope = float(b @ T / (b @ b))
        r = T - slope * b
        se = math.sqrt(float(r @ r) / max(len(b) - 1, 1) / float(b @ b))
        icpt = 0.0
        ratio = T / b
        spread = float(ratio.max() / ratio.min())
    theory = _theory(p, model)
    dev = None if theory is None else abs(slope - theory) / abs(theory)
    return ScalingFit(model, slope, se, icpt, theory, dev, len(rs), p, "+".join(sorted(solvers)), (float(eps.min()), float(eps.max())), spread)


def _theory(p, model):
    pred = predicted_lifespan(1.0, ProblemParams(p=p))
    want = {"power": Form.POWER, "b_eps": Form.B_EPS, "exponential": Form.EXPONENTIAL}[model]
    if pred.form is not want:
        raise FitError(f"model {model} does not match the predicted form {pred.form.value} at p={p}")
    return pred.exponent


def sliding_fits(records, model: str, window: int = 4) -> list:
    """Fits over consecutive windows of amplitudes, largest first, to expose drift."""
    rs = sorted(usable(records), key=lambda r: -r.eps)
    return [fit_exponent(rs[i : i + window], model, window) for i in range(len(rs) - window + 1)]


def compare_with_theory(fit: ScalingFit, prediction=None, tol: float = 0.1, ratio_factor: float = 2.0) -> dict:
    """Verdict for a fit, plus the heat-type exponent at the same ``p``.

    Power fits pass when the relative deviation is at most ``tol``.  ``b_eps``
    fits pass when ``T/b(eps)`` varies by less than ``ratio_factor``.
    A larger amplitude exponent means a longer lifespan as ``eps -> 0``.
    """
    params = ProblemParams(p=fit.p)
    prediction = prediction or predicted_lifespan(1.0, params)
    form = {"power": Form.POWER, "b_eps": Form.B_EPS, "exponential": Form.EXPONENTIAL}[fit.model]
    if prediction.form is not form:
        raise ValueError(f"regime mismatch: fit model {fit.model}, prediction {prediction.form.value}")
    if fit.model == "b_eps":
        passed = fit.ratio_spread is not None and fit.ratio_spread < ratio_factor
        dev = None
    else:
        dev = abs(fit.exponent - prediction.exponent) / abs(prediction.exponent)
        passed = dev <= tol
    out = {
        "model": fit.model,
        "p": fit.p,
        "fitted": fit.exponent,
        "stderr": fit.stderr,
        "predicted": prediction.exponent,
        "rel_deviation": dev,
        "ratio_spread": fit.ratio_spread,
        "tolerance": tol,
        "passed": bool(passed),
    }
    try:
        heat = predicted_lifespan(1.0, params, Reference.HEAT)
        out["heat_form"] = heat.form.value
        out["heat_exponent"] = heat.exponent
        if heat.form is Form.POWER and fit.model == "power":
            out["outlives_heat"] = bool(fit.exponent > heat.exponent)
    except ValueError:
        out["heat_form"] = None
    return out


# --------------------------------------------------------------------------
# outputs
# --------------------------------------------------------------------------

PLOT_SCRIPT = '''"""Log-log lifespan plot from records.csv and fits.json in this directory."""
import csv
import json
import math
from pathlib import Path

import matplotlib.pyplot as plt



def log_t(text):
    # lifespans beyond float range are written as mantissa e+exponent
    mant, _, exp = text.lower().partition("e")
    return math.log(float(mant)) + (int(exp) if exp else 0) * math.log(10)


here = Path(__file__).parent
rows = [r for r in csv.DictReader(open(here / "records.csv")) if r["status"] == "blew_up"]
fits = json.load(open(here / "fits.json"))
fig, ax = plt.subplots()
for solver in sorted({r["solver"] for r in rows}):
    pts = [r for r in rows if r["solver"] == solver]
    x = [math.log(1 / float(r["eps"])) for r in pts]
    y = [log_t(r["t_blowup"]) for r in pts]
    ax.plot(x, y, "o", label=solver)
for f in fits:
    if f["model"] == "power" and f["theory"] is not None:
        lo, hi = math.log(1 / f["eps_range"][1]), math.log(1 / f["eps_range"][0])
        ax.plot([lo, hi], [f["intercept"] + f["theory"] * lo, f["intercept"] + f["theory"] * hi], "--", label=f"slope {f['theory']:.4g}")
ax.set_xlabel("log(1/eps)")
ax.set_ylabel("log T")
ax.legend()
fig.savefig(here / "lifespan.png", dpi=120)
'''


def emit_outputs(records, fits: Sequence[ScalingFit], out_dir) -> dict:
    """Write ``records.csv``, ``fits.json`` and ``plot_lifespan.py`` into ``out_dir``."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise storage.StorageError(f"{out}: {e}") from e
    paths = {"records": out / "records.csv", "fits": out / "fits.json", "plot": out / "plot_lifespan.py"}
    storage.write_records_csv(paths["records"], records)
    storage.write_json(paths["fits"], [f.to_dict() if isinstance(f, ScalingFit) else f for f in fits])
    try:
        paths["plot"].write_text(PLOT_SCRIPT)
    except OSError as e:
        raise storage.StorageError(f"{paths['plot']}: {e}") from e
    return paths


def records_equal(a, b, ignore=("walltime",)) -> bool:
    """Field-wise equality of record lists, ignoring wall time."""
    if len(a) != len(b):
        return False
    strip = lambda r: {k: v for k, v in asdict(r).items() if k not in ignore}  # noqa: E731
    return all(strip(x) == strip(y) for x, y in zip(a, b))


def config_with(cfg: ExperimentConfig, **kw) -> ExperimentConfig:
    return replace(cfg, **kw)


def json_dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=storage._json_default)
