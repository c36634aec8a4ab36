"""Command-line front end: pool generation, runs, sweeps, live serving.

Configuration is flat INI with four sections: [pool] describes the data
(either a dataset CSV or synthetic-generator settings), [hyper] holds the
mining thresholds plus the training knobs, [strategy] picks the mode and
budget, [output] says where artifacts land.  $ASM_OUTPUT_DIR overrides the
output directory.
"""

from __future__ import annotations

import argparse
import configparser
import json
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .core import Hyperparameters
from .engine import (EngineConfig, MiningEngine, Mode, OracleAnnotationSource,
                     Strategy)
from .learner import SgdConfig, save_checkpoint
from .oracle import (SimulatedAnnotator, SyntheticData, initial_annotations,
                     inject_label_noise, make_synthetic_pool, read_pool_csv,
                     write_pool_csv)

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2


class ConfigError(Exception):
    """Invalid configuration; the message names the offending key."""


_POOL_KEYS = {"dataset", "n", "d", "undefined_fraction", "separation",
              "tangential_spread", "class_priors", "seed_fraction",
              "noise_fraction"}
_HYPER_KEYS = {"m", "lambda0", "gamma_factor", "alpha", "tau", "beta",
               "al_batch_size", "seed", "learning_rate", "weight_decay",
               "momentum", "batch_size", "model", "hidden_units",
               "warmup_iterations", "minibatches_per_round", "max_rounds",
               "max_iterations", "queue_patience", "standardize",
               "init_checkpoint"}
_STRATEGY_KEYS = {"mode", "annotation_budget", "budget_fraction",
                  "phase_switch"}
_OUTPUT_KEYS = {"dir", "decision_log"}
_SECTIONS = {"pool": _POOL_KEYS, "hyper": _HYPER_KEYS,
             "strategy": _STRATEGY_KEYS, "output": _OUTPUT_KEYS}


@dataclass
class RunSetup:
    """Everything a run needs, resolved from one config file."""

    pool_cfg: dict
    hyper: Hyperparameters
    strategy: Strategy
    engine_cfg: EngineConfig
    output_dir: Path
    decision_log: Optional[Path]
    budget_fraction: Optional[float]


def _get(parser, section, key, convert, default, errors: list):
    raw = parser.get(section, key, fallback=None)
    if raw is None or raw == "":
        return default
    try:
        return convert(raw)
    except (ValueError, TypeError):
        errors.append(f"{section}.{key}: cannot parse {raw!r}")
        return default


def _bool(raw: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(raw)


def _floats(raw: str) -> list[float]:
    return [float(tok) for tok in raw.split(",") if tok.strip()]


def load_config(path) -> RunSetup:
    """Parse and validate a config file; raises ConfigError naming the key."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    read = parser.read(path)
    if not read:
        raise ConfigError(f"config file not found: {path}")

    for section in parser.sections():
        if section not in _SECTIONS:
            raise ConfigError(f"unknown section [{section}]")
        for key in parser[section]:
            if key not in _SECTIONS[section]:
                raise ConfigError(f"unknown key `{section}.{key}`")

    errors: list[str] = []
    pool_cfg = {
        "dataset": _get(parser, "pool", "dataset", str, None, errors),
        "n": _get(parser, "pool", "n", int, 2000, errors),
        "d": _get(parser, "pool", "d", int, 2, errors),
        "undefined_fraction": _get(parser, "pool", "undefined_fraction",
                                   float, 0.2, errors),
        "separation": _get(parser, "pool", "separation", float, 4.0, errors),
        "tangential_spread": _get(parser, "pool", "tangential_spread", float,
                                  4.0, errors),
        "class_priors": _get(parser, "pool", "class_priors", _floats, None,
                             errors),
        "seed_fraction": _get(parser, "pool", "seed_fraction", float, 0.10,
                              errors),
        "noise_fraction": _get(parser, "pool", "noise_fraction", float, 0.0,
                               errors),
    }

    try:
        hyper = Hyperparameters(
            m=_get(parser, "hyper", "m", int, 4, errors),
            lambda0=_get(parser, "hyper", "lambda0", float,
                         -math.log(0.9), errors),
            gamma_factor=_get(parser, "hyper", "gamma_factor", float, 0.5,
                              errors),
            alpha=_get(parser, "hyper", "alpha", float, 0.08, errors),
            tau=_get(parser, "hyper", "tau", int, 5, errors),
            beta=_get(parser, "hyper", "beta", int, 10000, errors),
            al_batch_size=_get(parser, "hyper", "al_batch_size", int, 50,
                               errors),
            seed=_get(parser, "hyper", "seed", int, 0, errors),
        )
    except ValueError as exc:
        raise ConfigError(f"hyper: {exc}") from exc

    try:
        sgd = SgdConfig(
            learning_rate=_get(parser, "hyper", "learning_rate", float, 0.001,
                               errors),
            weight_decay=_get(parser, "hyper", "weight_decay", float, 0.0005,
                              errors),
            momentum=_get(parser, "hyper", "momentum", float, 0.9, errors),
            batch_size=_get(parser, "hyper", "batch_size", int, 32, errors),
        )
        engine_cfg = EngineConfig(
            minibatches_per_round=_get(parser, "hyper",
                                       "minibatches_per_round", int, 50,
                                       errors),
            max_rounds=_get(parser, "hyper", "max_rounds", int, 40, errors),
            max_iterations=_get(parser, "hyper", "max_iterations", int,
                                100_000, errors),
            warmup_iterations=_get(parser, "hyper", "warmup_iterations", int,
                                   200, errors),
            queue_patience=_get(parser, "hyper", "queue_patience", int, 3,
                                errors),
            sgd=sgd,
            model=_get(parser, "hyper", "model", str, "linear", errors),
            hidden_units=_get(parser, "hyper", "hidden_units", int, 32,
                              errors),
            standardize=_get(parser, "hyper", "standardize", _bool, True,
                             errors),
            init_checkpoint=_get(parser, "hyper", "init_checkpoint", str,
                                 None, errors),
        )
    except ValueError as exc:
        raise ConfigError(f"hyper: {exc}") from exc

    mode_name = _get(parser, "strategy", "mode", str, "asm", errors)
    try:
        mode = Mode(mode_name.lower())
    except ValueError:
        raise ConfigError(
            f"strategy.mode: unknown strategy name {mode_name!r} "
            f"(choose from {sorted(m.value for m in Mode)})")
    budget = _get(parser, "strategy", "annotation_budget", int, None, errors)
    budget_fraction = _get(parser, "strategy", "budget_fraction", float, None,
                           errors)
    if budget is not None and budget_fraction is not None:
        raise ConfigError(
            "strategy.annotation_budget and strategy.budget_fraction are "
            "mutually exclusive")
    phase_switch = _get(parser, "strategy", "phase_switch", int, None, errors)

    if errors:
        raise ConfigError("; ".join(errors))

    try:
        strategy = Strategy(mode=mode,
                            annotation_budget=0 if budget is None else budget,
                            phase_switch=phase_switch)
    except ValueError as exc:
        raise ConfigError(f"strategy: {exc}") from exc

    out_dir = Path(os.environ.get(
        "ASM_OUTPUT_DIR",
        _get(parser, "output", "dir", str, "out", errors)))
    decision_log = _get(parser, "output", "decision_log", str, None, errors)
    return RunSetup(pool_cfg=pool_cfg, hyper=hyper, strategy=strategy,
                    engine_cfg=engine_cfg, output_dir=out_dir,
                    decision_log=(out_dir / decision_log) if decision_log
                    else None,
                    budget_fraction=budget_fraction)


def materialize_pool(setup: RunSetup) -> SyntheticData:
    """Load or generate the pool described by [pool]."""
    cfg = setup.pool_cfg
    if cfg["dataset"]:
        pool = read_pool_csv(cfg["dataset"])
        n = len(pool)
        n_val = int(round(0.125 * n))        # mirrors the 70/10/20 split
        n_test = int(round(0.25 * n))
        if not pool.truth_known.all():
            data = SyntheticData(pool=pool, val_features=None, val_truth=None,
                                 test_features=None, test_truth=None,
                                 centers=np.zeros((0, pool.dim)),
                                 undefined_centers=np.zeros((0, pool.dim)))
            return data
        rng = np.random.default_rng(setup.hyper.seed)
        order = rng.permutation(n)
        val_ids = order[:n_val]
        test_ids = order[n_val:n_val + n_test]
        keep = order[n_val + n_test:]
        from .core import Pool
        data = SyntheticData(
            pool=Pool(features=pool.features[keep],
                      hidden_truth=pool.hidden_truth[keep]),
            val_features=pool.features[val_ids],
            val_truth=pool.hidden_truth[val_ids],
            test_features=pool.features[test_ids],
            test_truth=pool.hidden_truth[test_ids],
            centers=np.zeros((0, pool.dim)),
            undefined_centers=np.zeros((0, pool.dim)))
    else:
        data = make_synthetic_pool(
            n=cfg["n"], m=setup.hyper.m, d=cfg["d"],
            undefined_fraction=cfg["undefined_fraction"],
            separation=cfg["separation"], seed=setup.hyper.seed,
            class_priors=cfg["class_priors"],
            tangential_spread=cfg["tangential_spread"])
    if cfg["noise_fraction"] > 0:
        data.pool = inject_label_noise(data.pool, cfg["noise_fraction"],
                                       seed=setup.hyper.seed + 10_000,
                                       m=setup.hyper.m)
    return data


def build_engine(setup: RunSetup, data: SyntheticData):
    """Wire pool, seeds, strategy, and engine for one run."""
    pool = data.pool
    if setup.budget_fraction is not None:
        setup.strategy.annotation_budget = int(
            round(setup.budget_fraction * len(pool)))
    rng = np.random.default_rng(setup.hyper.seed)
    n_seeds = max(1, int(round(setup.pool_cfg["seed_fraction"] * len(pool))))
    seed_ids = rng.choice(len(pool), size=n_seeds, replace=False)
    seed_decisions = initial_annotations(pool, setup.hyper.m, seed_ids)
    engine = MiningEngine(pool, setup.hyper, setup.strategy, setup.engine_cfg,
                          seed_decisions,
                          val_features=data.val_features,
                          val_truth=data.val_truth,
                          test_features=data.test_features,
                          test_truth=data.test_truth)
    return engine


def run_experiment(config_path, dry_run=False, overrides=None) -> int:
    """The `run` verb: oracle-annotated mining run with artifacts on disk."""
    try:
        setup = load_config(config_path)
        _apply_overrides(setup, overrides or {})
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if dry_run:
        plan = {
            "pool": setup.pool_cfg,
            "hyper": vars(setup.hyper),
            "strategy": {"mode": setup.strategy.mode.value,
                         "annotation_budget": setup.strategy.annotation_budget,
                         "budget_fraction": setup.budget_fraction,
                         "phase_switch": setup.strategy.phase_switch},
            "engine": {k: (vars(v) if isinstance(v, SgdConfig) else v)
                       for k, v in vars(setup.engine_cfg).items()},
            "output_dir": str(setup.output_dir),
        }
        print(json.dumps(plan, indent=2, default=str))
        return EXIT_OK

    try:
        data = materialize_pool(setup)
        engine = build_engine(setup, data)
        annotator = SimulatedAnnotator(data.pool, setup.hyper.m,
                                       setup.strategy.annotation_budget)
        metrics = engine.run(OracleAnnotationSource(annotator))
        setup.output_dir.mkdir(parents=True, exist_ok=True)
        (setup.output_dir / "metrics.csv").write_text(metrics.to_csv_text())
        summary = metrics.summary()
        summary["pool_size"] = len(data.pool)
        summary["strategy"] = setup.strategy.mode.value
        summary["seed"] = setup.hyper.seed
        (setup.output_dir / "summary.json").write_text(
            json.dumps(summary, indent=2, sort_keys=True) + "\n")
        save_checkpoint(engine.params, setup.output_dir / "model.asmw")
    except Exception as exc:                      # noqa: BLE001
        print(f"run aborted: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    if metrics.aborted:
        print("training diverged; partial metrics written", file=sys.stderr)
        return EXIT_RUNTIME
    print(f"run complete: {setup.output_dir}/metrics.csv "
          f"(final accuracy {metrics.final_test_accuracy:.4f})")
    return EXIT_OK


def _apply_overrides(setup: RunSetup, overrides: dict) -> None:
    """Point updates used by sweeps: hyper fields only."""
    for key, value in overrides.items():
        if key == "lambda0":
            setup.hyper.lambda0 = float(value)
        elif key == "gamma_factor":
            setup.hyper.gamma_factor = float(value)
        elif key == "seed":
            setup.hyper.seed = int(value)
        else:
            raise ConfigError(f"unknown override `{key}`")


def run_sweep(config_path, parameter: str, values, seeds, out_path=None) -> int:
    """One run per (value, seed); emits a tidy CSV for sensitivity plots."""
    if parameter not in ("lambda0", "gamma_factor"):
        print(f"config error: sweep parameter must be lambda0 or "
              f"gamma_factor, got {parameter!r}", file=sys.stderr)
        return EXIT_CONFIG
    if not values:
        print("config error: sweep needs at least one value", file=sys.stderr)
        return EXIT_CONFIG
    try:
        base = load_config(config_path)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out_dir = base.output_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    out_path = Path(out_path) if out_path else out_dir / "sweep.csv"
    rows = ["parameter,value,seed,annotations_used,pseudo_fraction,"
            "final_accuracy,status"]
    for value in values:
        for seed in seeds:
            try:
                setup = load_config(config_path)
                _apply_overrides(setup, {parameter: value, "seed": seed})
                data = materialize_pool(setup)
                engine = build_engine(setup, data)
                annotator = SimulatedAnnotator(
                    data.pool, setup.hyper.m,
                    setup.strategy.annotation_budget)
                metrics = engine.run(OracleAnnotationSource(annotator))
                pseudo_fraction = (len(metrics.unique_pseudo_ids)
                                   / max(len(data.pool), 1))
                rows.append(
                    f"{parameter},{value:.10g},{seed},"
                    f"{metrics.queries_used},{pseudo_fraction:.10g},"
                    f"{metrics.final_test_accuracy:.10g},ok")
            except Exception as exc:              # noqa: BLE001
                rows.append(f"{parameter},{value:.10g},{seed},,,,"
                            f"failed: {exc}")
    out_path.write_text("\n".join(rows) + "\n")
    print(f"sweep complete: {out_path}")
    return EXIT_OK


def gen_pool(args) -> int:
    try:
        data = make_synthetic_pool(
            n=args.n, m=args.m, d=args.d,
            undefined_fraction=args.undefined_fraction,
            separation=args.separation, seed=args.seed,
            class_priors=_floats(args.class_priors) if args.class_priors
            else None,
            tangential_spread=args.tangential_spread)
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    from .core import Pool
    full = Pool(
        features=np.vstack([data.pool.features, data.val_features,
                            data.test_features]),
        hidden_truth=np.concatenate([data.pool.hidden_truth, data.val_truth,
                                     data.test_truth]))
    write_pool_csv(full, args.out)
    print(f"wrote {len(full)} samples to {args.out}")
    return EXIT_OK


def serve(config_path, port: int, ui_dir=None) -> int:
    try:
        setup = load_config(config_path)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        from .service import AnnotationService
        data = materialize_pool(setup)
        engine = build_engine(setup, data)
        setup.output_dir.mkdir(parents=True, exist_ok=True)
        log_path = setup.decision_log or setup.output_dir / "decisions.jsonl"
        service = AnnotationService(engine, port=port, ui_dir=ui_dir,
                                    decision_log=log_path)
        print(f"serving on http://127.0.0.1:{port} "
              f"(queue timeout handled per round; Ctrl-C stops)")
        service.run_forever()
    except KeyboardInterrupt:
        print("stopped")
    except Exception as exc:                      # noqa: BLE001
        print(f"service aborted: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="asm",
        description="Active sample mining: switchable annotation vs "
                    "self-labeling on a sample pool")
    sub = parser.add_subparsers(dest="verb", required=True)

    p_run = sub.add_parser("run", help="run one mining experiment")
    p_run.add_argument("config")
    p_run.add_argument("--dry-run", action="store_true",
                       help="validate config and print the resolved plan")

    p_sweep = sub.add_parser("sweep", help="hyperparameter sensitivity sweep")
    p_sweep.add_argument("config")
    p_sweep.add_argument("--parameter", required=True,
                         choices=["lambda0", "gamma_factor"])
    p_sweep.add_argument("--values", required=True,
                         help="comma-separated list")
    p_sweep.add_argument("--seeds", default="0",
                         help="comma-separated list")
    p_sweep.add_argument("--out", default=None)

    p_serve = sub.add_parser("serve", help="live annotation service")
    p_serve.add_argument("config")
    p_serve.add_argument("--port", type=int, default=8764)
    p_serve.add_argument("--ui-dir", default=None)

    p_gen = sub.add_parser("gen-pool", help="generate a synthetic pool CSV")
    p_gen.add_argument("--n", type=int, default=2000)
    p_gen.add_argument("--m", type=int, default=4)
    p_gen.add_argument("--d", type=int, default=2)
    p_gen.add_argument("--undefined-fraction", type=float, default=0.2)
    p_gen.add_argument("--separation", type=float, default=4.0)
    p_gen.add_argument("--tangential-spread", type=float, default=4.0)
    p_gen.add_argument("--class-priors", default=None)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--out", required=True)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.verb == "run":
        return run_experiment(args.config, dry_run=args.dry_run)
    if args.verb == "sweep":
        values = _floats(args.values)
        seeds = [int(s) for s in args.seeds.split(",") if s.strip()]
        return run_sweep(args.config, args.parameter, values, seeds, args.out)
    if args.verb == "serve":
        return serve(args.config, args.port, args.ui_dir)
    if args.verb == "gen-pool":
        return gen_pool(args)
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
