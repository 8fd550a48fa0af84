"""Monte-Carlo checks of the concentration and recovery guarantees."""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np
from scipy.stats import binomtest

from .errors import PropertyViolation
from .model import ModelSpec, QuantumModel
from .seeding import derive_seed, rng_for
from .surrogation import (
    ProbeSet,
    inference_budget,
    shot_budget,
    surrogate_exact,
    surrogate_with_shots,
)

# Monte-Carlo standard errors of slack allowed between an empirical tail and its bound
TAIL_SLACK_SE = 3.0


def l1_tail_bound(alpha, T: int, N: int, B: float):
    """``exp(T ln 2 - alpha^2 N / (2 T B^2))``, unclipped."""
    alpha = np.asarray(alpha, dtype=float)
    return np.exp(T * math.log(2.0) - alpha**2 * N / (2.0 * T * B**2))


def elementwise_hoeffding_bound(alpha, T: int, N: int, B: float):
    """``exp(ln 2 * ln(2T) - alpha^2 N / (2 T^2 B^2))``, unclipped.

    Kept in the exact printed form for display next to :func:`l1_tail_bound`;
    it is never used as an assertion threshold.
    """
    alpha = np.asarray(alpha, dtype=float)
    return np.exp(math.log(2.0) * math.log(2.0 * T) - alpha**2 * N / (2.0 * T**2 * B**2))


def sample_mean_l1_norms(T: int, N: int, B: float, trials: int, seed: int,
                         distribution: str = "coin", chunk: int = 10_000) -> np.ndarray:
    """``||eta||_1`` for ``trials`` draws of ``T`` sample means of ``N`` bounded variables.

    ``coin``: centred +-B coin flips (sampled exactly through a binomial
    count). ``uniform``: uniform on ``[-B, B]``.
    """
    out = np.empty(trials)
    for s in range(0, trials, chunk):
        m = min(chunk, trials - s)
        rng = rng_for(seed, "concentration", distribution, s)
        if distribution == "coin":
            k = rng.binomial(N, 0.5, size=(m, T))
            eta = B * (2.0 * k - N) / N
        elif distribution == "uniform":
            eta = np.empty((m, T))
            for j in range(T):
                eta[:, j] = rng.uniform(-B, B, size=(m, N)).mean(axis=1)
        else:
            raise ValueError(f"unknown distribution {distribution!r}")
        out[s : s + m] = np.abs(eta).sum(axis=1)
    return out


@dataclass(frozen=True)
class TailRow:
    alpha: float
    empirical: float
    std_error: float
    l1_bound: float
    hoeffding_bound: float
    within_bound: bool

    def display(self) -> dict:
        row = asdict(self)
        row["l1_bound"] = min(1.0, self.l1_bound)
        row["hoeffding_bound"] = min(1.0, self.hoeffding_bound)
        return row


def concentration_experiment(T: int, N: int, B: float, alpha_grid, trials: int, seed: int,
                             distribution: str = "coin", check: bool = True) -> list[TailRow]:
    """Empirical ``P[||eta||_1 >= alpha]`` against the closed-form bounds.

    With ``check`` set, raises :class:`PropertyViolation` if any empirical
    tail exceeds the l1 bound by more than three Monte-Carlo standard errors.
    """
    if min(T, N, trials) < 1:
        raise ValueError("T, N and trials must be positive")
    norms = sample_mean_l1_norms(T, N, B, trials, seed, distribution)
    alphas = np.asarray(alpha_grid, dtype=float)
    l1b = l1_tail_bound(alphas, T, N, B)
    hb = elementwise_hoeffding_bound(alphas, T, N, B)
    rows = []
    for a, b1, b2 in zip(alphas, l1b, hb):
        p = float(np.mean(norms >= a))
        se = math.sqrt(p * (1.0 - p) / trials)
        rows.append(TailRow(float(a), p, se, float(b1), float(b2),
                            bool(p <= b1 + TAIL_SLACK_SE * se)))
    if check:
        bad = [r for r in rows if not r.within_bound]
        if bad:
            raise PropertyViolation(
                "l1-concentration",
                f"empirical tail above bound at alpha={[r.alpha for r in bad]}",
            )
    return rows


def wilson_interval(successes: int, trials: int, level: float = 0.95) -> tuple[float, float]:
    ci = binomtest(successes, trials).proportion_ci(confidence_level=level, method="wilson")
    return float(ci.low), float(ci.high)


@dataclass(frozen=True)
class TrialSummary:
    trials: int
    successes: int
    empirical_rate: float
    bound_rate: float
    wilson_interval: tuple[float, float]
    epsilon: float
    delta: float
    shots_per_point: int
    N_total: int
    max_sup_error: float
    l1_chain_holds: bool

    @property
    def half_width(self) -> float:
        lo, hi = self.wilson_interval
        return 0.5 * (hi - lo)

    @property
    def meets_bound(self) -> bool:
        return self.empirical_rate >= self.bound_rate - self.half_width

    def to_json(self) -> dict:
        d = asdict(self)
        d["wilson_interval"] = list(self.wilson_interval)
        d["meets_bound"] = self.meets_bound
        return d


def _one_trial(args):
    spec, theta, budget, trial_seed, probes, exact_coeffs = args
    s = surrogate_with_shots(spec, theta, budget, trial_seed)
    err = probes.max_deviation(s)
    l1 = float(np.sum(np.abs(s.coeffs - exact_coeffs)))
    # the probe maximum can only sit below the l1 distance, up to rounding
    return err, err <= l1 + 1e-12


def recovery_trials(spec: ModelSpec, theta, epsilon: float, delta: float, trials: int,
                    seed: int, jobs: int = 1, probe_points_per_dim: int | None = None,
                    check: bool = True) -> TrialSummary:
    """Repeat shot-based surrogation and count sup-error successes.

    Success means the probe-set sup-error estimate (the same one used by
    :func:`surrogation.sup_error_estimate`) is at most ``epsilon``. Each
    trial also checks ``sup-error <= ||c - c_exact||_1``.
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    if trials == 1:
        warnings.warn("a single trial gives a degenerate confidence interval", stacklevel=2)
    theta = np.asarray(theta, dtype=float)
    exact = surrogate_exact(spec, theta)
    budget = shot_budget(epsilon, delta, exact.freq.T, spec.m_norm)
    probes = ProbeSet.build(QuantumModel(spec, theta), spec.d, probe_points_per_dim,
                            derive_seed(seed, "probes"))
    work = [(spec, theta, budget, derive_seed(seed, "trial", t), probes, exact.coeffs)
            for t in range(trials)]
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            results = list(pool.map(_one_trial, work, chunksize=max(1, trials // (4 * jobs))))
    else:
        results = [_one_trial(w) for w in work]
    errs = np.array([r[0] for r in results])
    successes = int(np.sum(errs <= epsilon))
    summary = TrialSummary(
        trials=trials,
        successes=successes,
        empirical_rate=successes / trials,
        bound_rate=1.0 - delta,
        wilson_interval=wilson_interval(successes, trials),
        epsilon=epsilon,
        delta=delta,
        shots_per_point=budget.N,
        N_total=budget.N_total,
        max_sup_error=float(errs.max()),
        l1_chain_holds=all(r[1] for r in results),
    )
    if check:
        if not summary.l1_chain_holds:
            raise PropertyViolation("l1-chain", "sup error exceeded the l1 coefficient error")
        if not summary.meets_bound:
            raise PropertyViolation(
                "recovery-rate",
                f"success rate {summary.empirical_rate:.3f} below 1-delta={summary.bound_rate:.3f} "
                f"minus Wilson half-width {summary.half_width:.3f}",
            )
    return summary


@dataclass(frozen=True)
class BudgetRow:
    T: int
    N: int
    N_total: int
    N_inference: int
    ratio: float


def budget_comparison(epsilon: float, delta: float, T_list, m_norm: float = 1.0,
                      check: bool = True) -> list[BudgetRow]:
    """Surrogation vs plain-inference shot totals for each ``T``.

    With ``check`` set, raises if ``ratio / T`` fails to decrease along
    increasing ``T`` (i.e. the overhead is not sub-linear).
    """
    rows = []
    for T in T_list:
        b = shot_budget(epsilon, delta, T, m_norm)
        ni = inference_budget(epsilon, delta, T, m_norm)
        rows.append(BudgetRow(int(T), b.N, b.N_total, ni, b.N_total / ni))
    if check:
        ordered = sorted(rows, key=lambda r: r.T)
        per_t = [r.ratio / r.T for r in ordered]
        if any(b >= a for a, b in zip(per_t, per_t[1:])):
            raise PropertyViolation("sublinear-overhead", f"ratio/T not decreasing: {per_t}")
    return rows
