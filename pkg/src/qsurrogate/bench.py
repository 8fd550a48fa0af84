"""Quantum-model vs. Fourier-surrogate training benchmark.

A benchmark is a grid of cells ``(model, run)``. Every cell derives its
seeds from the master seed and its labels, so results do not depend on the
number of workers or on execution order. Labels are standardised with the
training split's mean and standard deviation before training; reported
losses are converted back to the original label units.
"""
from __future__ import annotations

import hashlib
import json
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .datasets import (
    DEFAULT_VAL_FRACTION,
    Dataset,
    load_csv_dataset,
    random_pqc_dataset,
    synthetic_regression,
)
from .fourier_model import RealFourierModel, linear_best_fit
from .model import ModelSpec, QuantumModel, random_parameters
from .seeding import derive_seed
from .spectrum import frequency_set
from .training import LossTrace, OptimizerConfig, train

SCHEMA_VERSION = 1
# rounding slack for comparing an SVD optimum with a trained loss
LOWER_BOUND_RTOL = 1e-9


@dataclass(frozen=True)
class ModelEntry:
    name: str
    kind: str
    L: int
    B: int = 1

    def __post_init__(self):
        if self.kind not in ("quantum", "surrogate"):
            raise ValueError(f"model kind must be 'quantum' or 'surrogate', got {self.kind!r}")


@dataclass(frozen=True)
class BenchConfig:
    dataset: dict
    models: tuple[ModelEntry, ...]
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    runs: int = 50
    split_policy: str = "per_run"
    val_fraction: float = DEFAULT_VAL_FRACTION
    seed: int = 0
    assert_trained_ordering: bool = True

    def __post_init__(self):
        if self.runs < 1:
            raise ValueError("runs must be positive")
        if self.split_policy not in ("per_run", "fixed"):
            raise ValueError("split policy must be 'per_run' or 'fixed'")
        names = [m.name for m in self.models]
        if len(set(names)) != len(names) or not names:
            raise ValueError("model names must be unique and non-empty")

    @classmethod
    def from_json(cls, data: dict) -> "BenchConfig":
        version = data.get("schema_version", SCHEMA_VERSION)
        if version != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema_version {version}")
        split = data.get("split", {})
        return cls(
            dataset=dict(data["dataset"]),
            models=tuple(ModelEntry(**m) for m in data["models"]),
            optimizer=OptimizerConfig.from_json(data.get("optimizer")),
            runs=int(data.get("runs", 50)),
            split_policy=split.get("policy", "per_run"),
            val_fraction=float(split.get("val_fraction", DEFAULT_VAL_FRACTION)),
            seed=int(data.get("seed", 0)),
            assert_trained_ordering=bool(data.get("assert_trained_ordering", True)),
        )

    def to_json(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "dataset": self.dataset,
            "models": [asdict(m) for m in self.models],
            "optimizer": self.optimizer.to_json(),
            "runs": self.runs,
            "split": {"policy": self.split_policy, "val_fraction": self.val_fraction},
            "seed": self.seed,
            "assert_trained_ordering": self.assert_trained_ordering,
        }

    @property
    def config_hash(self) -> str:
        return hashlib.sha256(json.dumps(self.to_json(), sort_keys=True).encode()).hexdigest()[:16]


def make_dataset(desc: dict, seed: int, val_fraction: float) -> Dataset:
    desc = dict(desc)
    kind = desc.pop("kind")
    if kind == "synthetic":
        return synthetic_regression(seed=desc.pop("seed", seed), val_fraction=val_fraction, **desc)
    if kind == "random_pqc":
        return random_pqc_dataset(seed=desc.pop("seed", seed), val_fraction=val_fraction, **desc)
    if kind == "csv":
        tr = desc.pop("target_range", None)
        return load_csv_dataset(desc.pop("path"), desc.pop("label_column"),
                                None if tr is None else tuple(tr), seed=seed,
                                val_fraction=val_fraction, **desc)
    raise ValueError(f"unknown dataset kind {kind!r}")


def _standardize(ds: Dataset) -> tuple[Dataset, float, float]:
    y = ds.train_labels
    mu, sd = float(y.mean()), float(y.std())
    if sd == 0.0:
        sd = 1.0
    return ds.with_labels((ds.labels - mu) / sd), mu, sd


def _run_cell(args):
    entry, ds, opt, init_seed, train_seed = args
    try:
        if entry.kind == "quantum":
            spec = ModelSpec(ds.d, entry.L, entry.B)
            model = QuantumModel(spec, random_parameters(spec, init_seed))
        else:
            model = RealFourierModel.zeros(frequency_set(ModelSpec(ds.d, entry.L, 1)))
        _, trace = train(model, ds, opt, train_seed)
        return {"status": "ok", "trace": trace}
    except Exception as exc:  # isolate failures per cell
        return {"status": "failed", "error": f"{type(exc).__name__}: {exc}",
                "traceback": traceback.format_exc(limit=5)}


@dataclass
class BenchmarkReport:
    config: BenchConfig
    runs: list[dict]
    aggregate: dict
    best_fit: dict
    properties: dict

    def to_json(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "config": self.config.to_json(),
            "config_hash": self.config.config_hash,
            "seed": self.config.seed,
            "runs": self.runs,
            "aggregate": self.aggregate,
            "best_fit": self.best_fit,
            "properties": self.properties,
        }

    def traces(self, name: str) -> list[LossTrace]:
        return [LossTrace(r["cells"][name]["trace"]["train_mse"], r["cells"][name]["trace"]["val_mse"])
                for r in self.runs if r["cells"][name]["status"] == "ok"]

    @property
    def violations(self) -> list[str]:
        return [k for k, v in self.properties.items() if v.get("asserted") and not v["holds"]]

    def plot_csv(self) -> str:
        lines = ["model,epoch,train_mean,train_std,val_mean,val_std,n_runs"]
        for name, agg in self.aggregate.items():
            for i, e in enumerate(agg["epoch"]):
                lines.append(",".join([name, str(e)] + [repr(agg[k][i]) for k in
                             ("train_mean", "train_std", "val_mean", "val_std")] + [str(agg["n_runs"])]))
        for L, bf in self.best_fit.items():
            lines.append(f"best_fit_L{L},,{bf['train_mean']!r},{bf['train_std']!r},"
                         f"{bf['val_mean']!r},{bf['val_std']!r},{bf['n_runs']}")
        return "\n".join(lines) + "\n"

    def write(self, out_dir) -> list[Path]:
        out = Path(out_dir)
        (out / "traces").mkdir(parents=True, exist_ok=True)
        paths = []
        for r in self.runs:
            for name, cell in r["cells"].items():
                if cell["status"] != "ok":
                    continue
                p = out / "traces" / f"{name}_run{r['run']:03d}.csv"
                t = cell["trace"]
                p.write_text(LossTrace(t["train_mse"], t["val_mse"]).to_csv())
                paths.append(p)
        p = out / "report.json"
        p.write_text(json.dumps(self.to_json(), indent=1, sort_keys=True) + "\n")
        paths.append(p)
        p = out / "plot.csv"
        p.write_text(self.plot_csv())
        paths.append(p)
        return paths


def _mean_std(rows: list[list[float]]) -> tuple[list[float], list[float]]:
    if not rows:
        return [], []
    n = min(len(r) for r in rows)
    a = np.array([r[:n] for r in rows], dtype=float)
    return a.mean(axis=0).tolist(), a.std(axis=0).tolist()


def run_benchmark(config: BenchConfig, jobs: int = 1) -> BenchmarkReport:
    """Train every model for every run and check the loss orderings.

    Asserted properties (recorded in ``report.properties``; a violation is
    listed in ``report.violations``):

    * ``lower_bound``: the least-squares optimum with a quantum model's
      frequency set is at most that model's final training MSE.
    * ``trained_ordering``: a trained surrogate whose spectrum contains the
      quantum model's ends at or below the quantum model's training MSE
      (only if ``assert_trained_ordering``).

    ``expressivity_trend`` (does more block layers lower the loss) is recorded
    but never asserted.
    """
    master = config.seed
    base = make_dataset(config.dataset, derive_seed(master, "dataset"), config.val_fraction)
    fixed_split = derive_seed(master, "split")
    run_meta, work = [], []
    best_cache: dict[tuple[int, int], dict] = {}
    for r in range(config.runs):
        split_seed = derive_seed(master, "split", r) if config.split_policy == "per_run" else fixed_split
        ds, mu, sd = _standardize(base.resplit(split_seed, config.val_fraction))
        best = {}
        for L in sorted({m.L for m in config.models}):
            key = (split_seed, L)
            if key not in best_cache:
                freq = frequency_set(ModelSpec(ds.d, L, 1))
                fit, rep = linear_best_fit(ds.train_inputs, ds.train_labels, freq)
                val = float(np.mean((fit(ds.val_inputs) - ds.val_labels) ** 2)) if ds.val_idx.size else float("nan")
                best_cache[key] = {"train_mse": rep.residual * sd**2, "val_mse": val * sd**2,
                                   "condition_number": rep.condition_number, "rank": rep.rank}
            best[str(L)] = best_cache[key]
        run_meta.append({"run": r, "split_seed": split_seed, "label_mean": mu, "label_std": sd,
                         "n_train": int(ds.train_idx.size), "n_val": int(ds.val_idx.size),
                         "best_fit": best, "cells": {}})
        for m in config.models:
            work.append((r, m.name, (m, ds, config.optimizer,
                                     derive_seed(master, "init", m.name, r),
                                     derive_seed(master, "train", m.name, r))))

    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            results = list(pool.map(_run_cell, [w[2] for w in work]))
    else:
        results = [_run_cell(w[2]) for w in work]

    for (r, name, _), res in zip(work, results):
        sd2 = run_meta[r]["label_std"] ** 2
        if res["status"] == "ok":
            res = {"status": "ok", "trace": res["trace"].scaled(sd2).to_json()}
        run_meta[r]["cells"][name] = res

    return BenchmarkReport(config, run_meta, _aggregate(config, run_meta),
                           _best_fit_aggregate(run_meta), _properties(config, run_meta))


def _aggregate(config, runs) -> dict:
    agg = {}
    for m in config.models:
        ok = [r["cells"][m.name]["trace"] for r in runs if r["cells"][m.name]["status"] == "ok"]
        tm, ts = _mean_std([t["train_mse"] for t in ok])
        vm, vs = _mean_std([t["val_mse"] for t in ok])
        agg[m.name] = {"epoch": list(range(len(tm))), "train_mean": tm, "train_std": ts,
                       "val_mean": vm, "val_std": vs, "n_runs": len(ok)}
    return agg


def _best_fit_aggregate(runs) -> dict:
    out = {}
    for L in runs[0]["best_fit"]:
        tr = np.array([r["best_fit"][L]["train_mse"] for r in runs])
        va = np.array([r["best_fit"][L]["val_mse"] for r in runs])
        out[L] = {"train_mean": float(tr.mean()), "train_std": float(tr.std()),
                  "val_mean": float(va.mean()), "val_std": float(va.std()), "n_runs": len(runs)}
    return out


def _final(cell) -> float | None:
    return cell["trace"]["train_mse"][-1] if cell["status"] == "ok" else None


def _properties(config, runs) -> dict:
    quantum = [m for m in config.models if m.kind == "quantum"]
    surrogates = [m for m in config.models if m.kind == "surrogate"]
    lb_viol, ord_viol = [], []
    for r in runs:
        for q in quantum:
            qf = _final(r["cells"][q.name])
            if qf is None:
                continue
            best = r["best_fit"][str(q.L)]["train_mse"]
            if best > qf * (1 + LOWER_BOUND_RTOL) + 1e-15:
                lb_viol.append({"run": r["run"], "model": q.name, "best_fit": best, "quantum": qf})
            for s in surrogates:
                sf = _final(r["cells"][s.name])
                if sf is not None and s.L >= q.L and sf > qf * (1 + LOWER_BOUND_RTOL) + 1e-15:
                    ord_viol.append({"run": r["run"], "surrogate": s.name, "quantum": q.name,
                                     "surrogate_mse": sf, "quantum_mse": qf})
    failed = [{"run": r["run"], "model": n} for r in runs for n, c in r["cells"].items()
              if c["status"] != "ok"]
    trend = {}
    for L in sorted({q.L for q in quantum}):
        group = sorted((q for q in quantum if q.L == L), key=lambda q: q.B)
        finals = []
        for q in group:
            vals = [_final(r["cells"][q.name]) for r in runs]
            vals = [v for v in vals if v is not None]
            finals.append(float(np.mean(vals)) if vals else None)
        ok = [f for f in finals if f is not None]
        trend[str(L)] = {"models": [q.name for q in group], "B": [q.B for q in group],
                         "mean_final_train_mse": finals,
                         "monotone": all(b <= a for a, b in zip(ok, ok[1:]))}
    return {
        "lower_bound": {"asserted": True, "holds": not lb_viol, "violations": lb_viol},
        "trained_ordering": {"asserted": config.assert_trained_ordering, "holds": not ord_viol,
                             "violations": ord_viol},
        "expressivity_trend": {"asserted": False, "holds": all(t["monotone"] for t in trend.values()),
                               "by_L": trend},
        "failed_cells": {"asserted": False, "holds": not failed, "cells": failed},
    }
