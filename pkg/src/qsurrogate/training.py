"""Full-batch training of quantum models and Fourier surrogates.

Two optimizers are available:

``lbfgs``
    Limited-memory BFGS with a strong Wolfe line search. Steps are only
    accepted when they satisfy the sufficient-decrease condition, so the
    training loss never increases from one epoch to the next.
``gd``
    Plain (optionally mini-batch) gradient descent with a fixed step size.

One epoch is ``iterations_per_epoch`` optimizer iterations (default 1).
"""
from __future__ import annotations

import csv
import io
import math
from collections import deque
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from .datasets import Dataset
from .errors import OptimizerError
from .fourier_model import RealFourierModel, design_matrix
from .model import QuantumModel, evaluate_batch, mse_and_grad
from .seeding import rng_for


@dataclass(frozen=True)
class OptimizerConfig:
    method: str = "lbfgs"
    epochs: int = 100
    iterations_per_epoch: int = 1
    history_size: int = 10
    c1: float = 1e-4
    c2: float = 0.9
    max_line_search: int = 25
    grad_tol: float = 1e-12
    lr: float = 0.1
    batch_size: int | None = None
    patience: int | None = None

    def __post_init__(self):
        if self.method not in ("lbfgs", "gd"):
            raise ValueError(f"unknown optimizer {self.method!r}")
        if self.epochs < 0 or self.iterations_per_epoch < 1:
            raise ValueError("epochs must be >= 0 and iterations_per_epoch >= 1")
        if not 0 < self.c1 < self.c2 < 1:
            raise ValueError("Wolfe constants need 0 < c1 < c2 < 1")

    @classmethod
    def from_json(cls, data: dict | None) -> "OptimizerConfig":
        data = dict(data or {})
        aliases = {"quasi-newton-wolfe": "lbfgs", "gradient-descent": "gd"}
        if "method" in data:
            data["method"] = aliases.get(data["method"], data["method"])
        return cls(**data)

    def to_json(self) -> dict:
        return asdict(self)


@dataclass
class LossTrace:
    train_mse: list[float] = field(default_factory=list)
    val_mse: list[float] = field(default_factory=list)

    @property
    def epochs(self) -> list[int]:
        return list(range(len(self.train_mse)))

    def __len__(self) -> int:
        return len(self.train_mse)

    def scaled(self, factor: float) -> "LossTrace":
        return LossTrace([v * factor for v in self.train_mse], [v * factor for v in self.val_mse])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["epoch", "train_mse", "val_mse"])
        for e, (t, v) in enumerate(zip(self.train_mse, self.val_mse)):
            w.writerow([e, repr(t), repr(v)])
        return buf.getvalue()

    def to_json(self) -> dict:
        return {"epoch": self.epochs, "train_mse": self.train_mse, "val_mse": self.val_mse}


Objective = Callable[[np.ndarray], tuple[float, np.ndarray]]


def _cubic_minimizer(a, fa, ga, b, fb, gb) -> float | None:
    d1 = ga + gb - 3.0 * (fa - fb) / (a - b)
    rad = d1 * d1 - ga * gb
    if rad < 0:
        return None
    d2 = math.copysign(math.sqrt(rad), b - a)
    denom = gb - ga + 2.0 * d2
    if denom == 0:
        return None
    return b - (b - a) * (gb + d2 - d1) / denom


def _interpolate(a, fa, ga, b, fb, gb) -> float:
    lo, hi = min(a, b), max(a, b)
    t = _cubic_minimizer(a, fa, ga, b, fb, gb)
    margin = 0.1 * (hi - lo)
    if t is None or not np.isfinite(t) or t < lo + margin or t > hi - margin:
        return 0.5 * (lo + hi)
    return t


def strong_wolfe_search(
    phi: Callable[[float], tuple[float, np.ndarray]],
    direction: np.ndarray,
    f0: float,
    g0: np.ndarray,
    t0: float,
    c1: float = 1e-4,
    c2: float = 0.9,
    max_evals: int = 25,
):
    """Bracketing + zoom search for a step satisfying the strong Wolfe conditions.

    ``phi(t)`` returns the objective and gradient at ``x + t * direction``.
    Returns ``(t, f, g)`` or ``None`` when no step with sufficient decrease
    was found. If the evaluation budget runs out after finding a
    sufficient-decrease step without the curvature condition, that step is
    returned.
    """
    dg0 = float(g0 @ direction)
    if dg0 >= 0:
        return None
    best = None
    evals = 0

    def armijo(t, f):
        return f <= f0 + c1 * t * dg0

    def note(t, f, g):
        nonlocal best
        if armijo(t, f) and (best is None or f < best[1]):
            best = (t, f, g)

    def zoom(lo, f_lo, g_lo, dg_lo, hi, f_hi, dg_hi):
        nonlocal evals
        while evals < max_evals:
            t = _interpolate(lo, f_lo, dg_lo, hi, f_hi, dg_hi)
            f, g = phi(t)
            evals += 1
            dg = float(g @ direction)
            note(t, f, g)
            if not armijo(t, f) or f >= f_lo:
                hi, f_hi, dg_hi = t, f, dg
            else:
                if abs(dg) <= -c2 * dg0:
                    return t, f, g
                if dg * (hi - lo) >= 0:
                    hi, f_hi, dg_hi = lo, f_lo, dg_lo
                lo, f_lo, g_lo, dg_lo = t, f, g, dg
            if abs(hi - lo) < 1e-16 * max(1.0, abs(lo)):
                break
        return best

    t_prev, f_prev, g_prev, dg_prev = 0.0, f0, g0, dg0
    t = t0
    while evals < max_evals:
        f, g = phi(t)
        evals += 1
        if not np.isfinite(f):
            # overshoot into a non-finite region: shrink toward the last point
            t = 0.5 * (t_prev + t)
            continue
        dg = float(g @ direction)
        note(t, f, g)
        if not armijo(t, f) or (evals > 1 and f >= f_prev):
            return zoom(t_prev, f_prev, g_prev, dg_prev, t, f, dg)
        if abs(dg) <= -c2 * dg0:
            return t, f, g
        if dg >= 0:
            return zoom(t, f, g, dg, t_prev, f_prev, dg_prev)
        t_prev, f_prev, g_prev, dg_prev = t, f, g, dg
        t = 2.0 * t
    return best


class LBFGS:
    """Minimal L-BFGS state machine over a flat parameter vector."""

    def __init__(self, objective: Objective, x0: np.ndarray, config: OptimizerConfig):
        self.objective = objective
        self.config = config
        self.x = np.array(x0, dtype=float)
        self.f, self.g = objective(self.x)
        self.s_hist: deque = deque(maxlen=config.history_size)
        self.y_hist: deque = deque(maxlen=config.history_size)

    def _direction(self) -> np.ndarray:
        q = -self.g.copy()
        alphas = []
        for s, y in zip(reversed(self.s_hist), reversed(self.y_hist)):
            rho = 1.0 / (y @ s)
            a = rho * (s @ q)
            q -= a * y
            alphas.append((rho, a))
        if self.s_hist:
            s, y = self.s_hist[-1], self.y_hist[-1]
            q *= (s @ y) / (y @ y)
        for (s, y), (rho, a) in zip(zip(self.s_hist, self.y_hist), reversed(alphas)):
            b = rho * (y @ q)
            q += (a - b) * s
        return q

    def step(self) -> bool:
        """One iteration; returns False when no further progress is possible."""
        cfg = self.config
        if np.max(np.abs(self.g)) <= cfg.grad_tol:
            return False
        for attempt in range(2):
            if self.s_hist:
                d, t0 = self._direction(), 1.0
            else:
                d = -self.g
                t0 = min(1.0, 1.0 / float(np.sum(np.abs(self.g))))
            if self.g @ d >= 0:
                self.s_hist.clear()
                self.y_hist.clear()
                continue
            x = self.x
            res = strong_wolfe_search(
                lambda t: self.objective(x + t * d), d, self.f, self.g, t0,
                cfg.c1, cfg.c2, cfg.max_line_search,
            )
            if res is not None:
                t, f, g = res
                s, y = t * d, g - self.g
                if s @ y > 1e-10 * (y @ y):
                    self.s_hist.append(s)
                    self.y_hist.append(y)
                self.x, self.f, self.g = x + s, f, g
                return True
            if not self.s_hist:
                return False
            self.s_hist.clear()
            self.y_hist.clear()
        return False


@dataclass
class _Problem:
    objective: Objective
    val_loss: Callable[[np.ndarray], float]
    batch_objective: Callable[[np.ndarray, np.ndarray], tuple[float, np.ndarray]]
    n_train: int


def _surrogate_problem(model: RealFourierModel, ds: Dataset) -> _Problem:
    Phi = design_matrix(ds.train_inputs, model.freq)
    y = ds.train_labels
    Phi_val = design_matrix(ds.val_inputs, model.freq) if ds.val_idx.size else None
    y_val = ds.val_labels

    def batch_obj(w, idx):
        r = Phi[idx] @ w - y[idx]
        return float(np.mean(r * r)), 2.0 * (Phi[idx].T @ r) / idx.size

    def obj(w):
        r = Phi @ w - y
        return float(np.mean(r * r)), 2.0 * (Phi.T @ r) / y.size

    def val(w):
        return float(np.mean((Phi_val @ w - y_val) ** 2)) if Phi_val is not None else math.nan

    return _Problem(obj, val, batch_obj, y.size)


def _quantum_problem(model: QuantumModel, ds: Dataset) -> _Problem:
    spec = model.spec
    X, y = ds.train_inputs, ds.train_labels
    Xv, yv = ds.val_inputs, ds.val_labels

    def val(theta):
        if not ds.val_idx.size:
            return math.nan
        return float(np.mean((evaluate_batch(spec, theta, Xv) - yv) ** 2))

    return _Problem(
        lambda th: mse_and_grad(spec, th, X, y),
        val,
        lambda th, idx: mse_and_grad(spec, th, X[idx], y[idx]),
        y.size,
    )


def _check_finite(loss: float, epoch: int, trace: LossTrace, grad=None):
    if not np.isfinite(loss):
        last = next((v for v in reversed(trace.train_mse) if np.isfinite(v)), None)
        gnorm = None if grad is None else float(np.linalg.norm(grad))
        raise OptimizerError(
            f"non-finite training loss at epoch {epoch} (last finite loss {last}, "
            f"gradient norm {gnorm})"
        )


def train(model, dataset: Dataset, config: OptimizerConfig | None = None, seed: int = 0):
    """Train ``model`` on ``dataset``'s training split.

    ``model`` is a :class:`RealFourierModel` or a :class:`QuantumModel`.
    Returns ``(trained_model, LossTrace)``; the trace has ``epochs + 1``
    entries, entry 0 being the loss of the initial parameters (fewer when
    early stopping via ``patience`` triggers).
    """
    config = config or OptimizerConfig()
    if isinstance(model, RealFourierModel):
        prob = _surrogate_problem(model, dataset)
        x0 = model.params

        def rebuild(p):
            return RealFourierModel.from_params(model.freq, p)
    elif isinstance(model, QuantumModel):
        prob = _quantum_problem(model, dataset)
        x0 = np.asarray(model.theta, dtype=float)

        def rebuild(p):
            return QuantumModel(model.spec, p)
    else:
        raise TypeError(f"cannot train {type(model).__name__}")

    trace = LossTrace()
    rng = rng_for(seed, "train")
    if config.method == "lbfgs":
        opt = LBFGS(prob.objective, x0, config)
        x, loss, grad = opt.x, opt.f, opt.g
    else:
        x = x0.copy()
        loss, grad = prob.objective(x)
    _check_finite(loss, 0, trace, grad)
    trace.train_mse.append(loss)
    trace.val_mse.append(prob.val_loss(x))
    best_val, stale = trace.val_mse[0], 0

    for epoch in range(1, config.epochs + 1):
        if config.method == "lbfgs":
            for _ in range(config.iterations_per_epoch):
                if not opt.step():
                    break
            x, loss, grad = opt.x, opt.f, opt.g
        else:
            for _ in range(config.iterations_per_epoch):
                if config.batch_size:
                    order = rng.permutation(prob.n_train)
                    for s in range(0, prob.n_train, config.batch_size):
                        _, g = prob.batch_objective(x, order[s : s + config.batch_size])
                        x = x - config.lr * g
                else:
                    x = x - config.lr * grad
                loss, grad = prob.objective(x)
                _check_finite(loss, epoch, trace, grad)
        _check_finite(loss, epoch, trace, grad)
        trace.train_mse.append(loss)
        trace.val_mse.append(prob.val_loss(x))
        if config.patience is not None:
            if trace.val_mse[-1] < best_val:
                best_val, stale = trace.val_mse[-1], 0
            else:
                stale += 1
                if stale >= config.patience:
                    break
    return rebuild(x), trace


