"""Command-line interface.

Exit codes: 0 success, 2 usage error, 3 resource cap exceeded, 4 an asserted
property was violated.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

from . import __version__
from .bench import BenchConfig, run_benchmark
from .errors import DatasetError, PropertyViolation, ResourceError
from .guarantees import budget_comparison, concentration_experiment, recovery_trials
from .model import ModelSpec, QuantumModel, random_parameters
from .spectrum import DEFAULT_GRID_CAP, frequency_set
from .surrogation import (
    shot_budget,
    sup_error_estimate,
    surrogate_exact,
    surrogate_with_shots,
)

EXIT_OK, EXIT_USAGE, EXIT_RESOURCE, EXIT_PROPERTY = 0, 2, 3, 4
MANIFEST_NAME = "manifest.json"


class UsageError(Exception):
    pass


def _dump(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True) + "\n"


def _read_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise UsageError(f"no such file: {path}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: malformed JSON ({exc})") from None


def _load_spec(path) -> ModelSpec:
    data = _read_json(path)
    try:
        return ModelSpec.from_json(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"{path}: invalid model config ({exc})") from None


def _load_theta(spec: ModelSpec, path) -> np.ndarray:
    if path is None:
        return random_parameters(spec, spec.seed)
    p = Path(path)
    if p.suffix == ".npy":
        theta = np.load(p)
    else:
        data = _read_json(p)
        theta = np.asarray(data["theta"] if isinstance(data, dict) else data, dtype=float)
    if theta.shape != (spec.n_params,):
        raise UsageError(f"{path}: expected {spec.n_params} parameters, got shape {theta.shape}")
    return theta


def _write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    with os.fdopen(fd, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


class Run:
    """Collects artifacts of one command and writes its manifest."""

    def __init__(self, args, argv):
        self.args = args
        self.argv = list(argv)
        self.out = Path(args.out) if getattr(args, "out", None) else None
        self.artifacts: list[str] = []
        self.config: dict = {}
        self.start = time.perf_counter()

    def write(self, name: str, text: str) -> None:
        if self.out is None:
            return
        _write_atomic(self.out / name, text)
        self.artifacts.append(name)

    def add_existing(self, paths) -> None:
        self.artifacts.extend(str(Path(p).relative_to(self.out)) for p in paths)

    def finish(self, exit_code: int, extra: dict | None = None) -> int:
        if self.out is not None:
            manifest = {
                "schema_version": 1,
                "command": self.args.command,
                "argv": self.argv,
                "cwd": os.getcwd(),
                "config": self.config,
                "seed": getattr(self.args, "seed", None),
                "artifacts": sorted(self.artifacts),
                "tool_version": __version__,
                "duration_s": time.perf_counter() - self.start,
                "exit_code": exit_code,
                **(extra or {}),
            }
            _write_atomic(self.out / MANIFEST_NAME, _dump(manifest))
        return exit_code


def cmd_spectrum(args, run: Run) -> int:
    spec = _load_spec(args.model)
    freq = frequency_set(spec)
    info = {"d": spec.d, "L": spec.L, "per_feature_max": list(freq.per_feature_max),
            "T_i": list(freq.sizes), "T": freq.T}
    run.config = {"model": spec.to_json()}
    print(f"d={info['d']} omega_max={info['per_feature_max']} T_i={info['T_i']} T={info['T']}")
    run.write("spectrum.json", _dump(info))
    return EXIT_OK


def cmd_surrogate(args, run: Run) -> int:
    spec = _load_spec(args.model)
    theta = _load_theta(spec, args.theta)
    freq = frequency_set(spec)
    if freq.T > args.cap:
        raise ResourceError(f"grid size T={freq.T} exceeds cap {args.cap}")
    run.config = {"model": spec.to_json(), "theta": theta.tolist(), "mode": args.mode,
                  "epsilon": args.epsilon, "delta": args.delta, "seed": args.seed, "cap": args.cap}
    if args.mode == "exact":
        s = surrogate_exact(spec, theta, cap=args.cap)
        cert = {"mode": "exact", "epsilon": args.epsilon, "delta": args.delta,
                "N": 0, "N_total": 0, "certified": True}
    else:
        if args.epsilon is None or args.delta is None:
            raise UsageError("--mode shots needs --epsilon and --delta")
        budget = shot_budget(args.epsilon, args.delta, freq.T, spec.m_norm)
        s = surrogate_with_shots(spec, theta, budget, args.seed, cap=args.cap)
        cert = {"mode": "shots", **budget.to_json()}
    cert["T"] = freq.T
    cert["m_norm"] = spec.m_norm
    cert["sup_error_estimate"] = sup_error_estimate(
        QuantumModel(spec, theta), s, args.probe_points, seed=args.seed, d=spec.d)
    print(f"T={freq.T} mode={cert['mode']} N={cert['N']} N_total={cert['N_total']} "
          f"sup_error_estimate={cert['sup_error_estimate']:.3e}")
    run.write("surrogate.json", _dump(s.to_json()))
    run.write("certificate.json", _dump(cert))
    return EXIT_OK


def _t_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def cmd_verify(args, run: Run) -> int:
    spec = _load_spec(args.model)
    theta = _load_theta(spec, args.theta)
    run.config = {"model": spec.to_json(), "theta": theta.tolist(), "epsilon": args.epsilon,
                  "delta": args.delta, "trials": args.trials, "T_list": args.T_list,
                  "seed": args.seed}
    summary = recovery_trials(spec, theta, args.epsilon, args.delta, args.trials, args.seed,
                              jobs=args.jobs, probe_points_per_dim=args.probe_points, check=False)
    rows = budget_comparison(args.epsilon, args.delta, args.T_list, spec.m_norm, check=False)
    per_t = [r.ratio / r.T for r in sorted(rows, key=lambda r: r.T)]
    props = {
        "recovery_rate": summary.meets_bound,
        "l1_chain": summary.l1_chain_holds,
        "sublinear_overhead": all(b < a for a, b in zip(per_t, per_t[1:])),
    }
    lines = ["T,N,N_total,N_inference,ratio"]
    lines += [f"{r.T},{r.N},{r.N_total},{r.N_inference},{r.ratio!r}" for r in rows]
    run.write("budget.csv", "\n".join(lines) + "\n")
    run.write("recovery.json", _dump(summary.to_json()))
    failed = [k for k, ok in props.items() if not ok]
    run.write("verdict.json", _dump({"passed": not failed, "properties": props, "failed": failed}))
    print(f"success rate {summary.empirical_rate:.3f} ({summary.successes}/{summary.trials}), "
          f"Wilson 95% [{summary.wilson_interval[0]:.3f}, {summary.wilson_interval[1]:.3f}], "
          f"N={summary.shots_per_point}")
    if failed:
        print(f"property violated: {', '.join(failed)}", file=sys.stderr)
        return EXIT_PROPERTY
    return EXIT_OK


def cmd_concentration(args, run: Run) -> int:
    cfg = {"T": 25, "N": 100, "B": 1.0, "trials": 100_000, "alphas": 20, "distribution": "coin"}
    if args.config:
        cfg.update(_read_json(args.config))
    for key in ("T", "N", "B", "trials", "alphas", "distribution"):
        v = getattr(args, key)
        if v is not None:
            cfg[key] = v
    alphas = cfg["alphas"]
    if isinstance(alphas, (int, float)):
        alphas = np.linspace(0.0, cfg["T"] * cfg["B"], int(alphas)).tolist()
    cfg["alphas"] = alphas
    cfg["seed"] = args.seed
    run.config = cfg
    rows = concentration_experiment(cfg["T"], cfg["N"], cfg["B"], alphas, cfg["trials"],
                                    args.seed, cfg["distribution"], check=False)
    lines = ["alpha,empirical,std_error,l1_bound,hoeffding_bound,l1_bound_raw,hoeffding_bound_raw,within_bound"]
    for r in rows:
        disp = r.display()
        lines.append(",".join(repr(float(v)) for v in (r.alpha, r.empirical, r.std_error,
                     disp["l1_bound"], disp["hoeffding_bound"], r.l1_bound, r.hoeffding_bound))
                     + f",{bool(r.within_bound)}")
    run.write("concentration.csv", "\n".join(lines) + "\n")
    ok = all(r.within_bound for r in rows)
    run.write("verdict.json", _dump({"passed": ok, "properties": {"l1_concentration": ok},
                                     "failed": [] if ok else ["l1_concentration"]}))
    print(f"{len(rows)} alphas, max empirical-minus-bound "
          f"{max(r.empirical - r.l1_bound for r in rows):.3e}")
    if not ok:
        print("property violated: l1_concentration", file=sys.stderr)
        return EXIT_PROPERTY
    return EXIT_OK


def cmd_bench(args, run: Run) -> int:
    data = _read_json(args.config)
    if args.runs is not None:
        data["runs"] = args.runs
    if args.epochs is not None:
        data.setdefault("optimizer", {})["epochs"] = args.epochs
    if args.seed is not None:
        data["seed"] = args.seed
    try:
        config = BenchConfig.from_json(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"{args.config}: invalid benchmark config ({exc})") from None
    run.config = config.to_json()
    try:
        report = run_benchmark(config, jobs=args.jobs)
    except (FileNotFoundError, DatasetError) as exc:
        raise UsageError(f"dataset: {exc}") from None
    if run.out is not None:
        run.add_existing(report.write(run.out))
    for name, agg in report.aggregate.items():
        if agg["n_runs"]:
            print(f"{name}: final train {agg['train_mean'][-1]:.4g} +- {agg['train_std'][-1]:.2g}, "
                  f"val {agg['val_mean'][-1]:.4g}")
    for L, bf in report.best_fit.items():
        print(f"best fit (L={L}): train {bf['train_mean']:.4g}, val {bf['val_mean']:.4g}")
    if report.violations:
        print(f"property violated: {', '.join(report.violations)}", file=sys.stderr)
        return EXIT_PROPERTY
    return EXIT_OK


def cmd_replay(args, run: Run) -> int:
    manifest = _read_json(args.manifest)
    argv = list(manifest["argv"])
    if args.out is not None:
        out = os.path.abspath(args.out)
        if "--out" in argv:
            argv[argv.index("--out") + 1] = out
        else:
            argv += ["--out", out]
    # relative paths in argv are relative to the directory of the original run
    prev = os.getcwd()
    cwd = manifest.get("cwd")
    if cwd and os.path.isdir(cwd):
        os.chdir(cwd)
    try:
        return main(argv)
    finally:
        os.chdir(prev)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qsurrogate", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed_default=0):
        sp.add_argument("--seed", type=int, default=seed_default)
        sp.add_argument("--out", help="directory for data artifacts and the run manifest")
        sp.add_argument("--jobs", type=int, default=os.cpu_count() or 1)

    sp = sub.add_parser("spectrum", help="print the frequency set of a model")
    sp.add_argument("model", help="model config JSON")
    sp.add_argument("--out")

    sp = sub.add_parser("surrogate", help="build a Fourier surrogate with its certificate")
    sp.add_argument("model")
    sp.add_argument("--theta", help="parameter file (.json or .npy); default: random from model seed")
    sp.add_argument("--mode", choices=("exact", "shots"), default="exact")
    sp.add_argument("--epsilon", type=float)
    sp.add_argument("--delta", type=float)
    sp.add_argument("--cap", type=int, default=DEFAULT_GRID_CAP)
    sp.add_argument("--probe-points", type=int, default=None)
    common(sp)

    sp = sub.add_parser("verify", help="Monte-Carlo check of the recovery guarantee")
    sp.add_argument("model")
    sp.add_argument("--theta")
    sp.add_argument("--epsilon", type=float, default=0.3)
    sp.add_argument("--delta", type=float, default=0.2)
    sp.add_argument("--trials", type=int, default=200)
    sp.add_argument("--T-list", type=_t_list, default=[1, 5, 25, 125])
    sp.add_argument("--probe-points", type=int, default=None)
    common(sp)

    sp = sub.add_parser("concentration", help="l1 tail of sample means vs the bounds")
    sp.add_argument("config", nargs="?", help="optional JSON with T, N, B, trials, alphas")
    sp.add_argument("--T", type=int)
    sp.add_argument("--N", type=int)
    sp.add_argument("--B", type=float)
    sp.add_argument("--trials", type=int)
    sp.add_argument("--alphas", type=int, help="number of alpha grid points on [0, T B]")
    sp.add_argument("--distribution", choices=("coin", "uniform"))
    common(sp)

    sp = sub.add_parser("bench", help="train quantum models and surrogates")
    sp.add_argument("config", help="benchmark config JSON")
    sp.add_argument("--runs", type=int)
    sp.add_argument("--epochs", type=int)
    common(sp, seed_default=None)

    sp = sub.add_parser("replay", help="re-run a command from its manifest")
    sp.add_argument("manifest")
    sp.add_argument("--out", help="new output directory (default: the recorded one)")
    return p


COMMANDS = {
    "spectrum": cmd_spectrum,
    "surrogate": cmd_surrogate,
    "verify": cmd_verify,
    "concentration": cmd_concentration,
    "bench": cmd_bench,
    "replay": cmd_replay,
}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(argv)
    run = Run(args, argv)
    try:
        code = COMMANDS[args.command](args, run)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ResourceError as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return run.finish(EXIT_RESOURCE) if args.command != "replay" else EXIT_RESOURCE
    except PropertyViolation as exc:
        print(f"property violated: {exc.prop}: {exc}", file=sys.stderr)
        return run.finish(EXIT_PROPERTY) if args.command != "replay" else EXIT_PROPERTY
    if args.command == "replay":
        return code
    return run.finish(code)


if __name__ == "__main__":
    sys.exit(main())
