"""Command-line interface wiring the full pipeline.

Subcommands: ``inject``, ``preprocess``, ``train``, ``score``, ``eval`` and
``pipeline``. Defaults can be overridden by a JSON config file (``--config``)
and config-file values by explicit flags. Every command writes a
``manifest.json`` into its output directory recording the seed and the full
resolved configuration.

Exit codes: 0 success, 2 user/config error, 1 internal error. Set
``EGOMATCH_NUM_THREADS`` to pin the BLAS thread count.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import traceback
from pathlib import Path

from .errors import ConfigError, EgomatchError

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_USAGE = 2

DEFAULTS = {
    "k": 2,
    "d_h": 128,
    "lr": 3e-4,
    "epochs": 100,
    "alpha": 0.9,
    "gamma": 0.1,
    "batch_size": "full",
    "seed": 0,
    "eps_clamp": 1e-7,
    "candidate_size": 50,
    "normalize_features": False,
    "fast": False,
}


def _configure_threads() -> None:
    # must run before numpy is imported anywhere in this process
    count = os.environ.get("EGOMATCH_NUM_THREADS")
    if count:
        for var in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, count)


def _batch_size(text: str):
    if text == "full":
        return "full"
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"batch size must be 'full' or an integer, got {text!r}"
        ) from None


def _add_config_flag(parser):
    parser.add_argument("--config", type=Path, default=None,
                        help="JSON file with default-overriding settings")


def _add_graph_inputs(parser, required=True):
    parser.add_argument("--edges", type=Path, required=required,
                        help="edge list file (one 'i j' pair per line)")
    parser.add_argument("--features", type=Path, required=required,
                        help="feature matrix file (one row per node)")
    parser.add_argument("--normalize-features", action="store_true",
                        default=None, help="row-wise L1 feature normalization")


def _add_training_flags(parser):
    parser.add_argument("--k", type=int, default=None, help="propagation steps")
    parser.add_argument("--dh", type=int, default=None, help="embedding dimension")
    parser.add_argument("--lr", type=float, default=None, help="learning rate")
    parser.add_argument("--epochs", type=int, default=None)
    parser.add_argument("--alpha", type=float, default=None,
                        help="neighbor-negative weight")
    parser.add_argument("--gamma", type=float, default=None,
                        help="ego-negative weight")
    parser.add_argument("--batch-size", type=_batch_size, default=None,
                        help="'full' or a mini-batch size")
    parser.add_argument("--eps-clamp", type=float, default=None)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--fast", action="store_true", default=None,
                        help="allow nondeterministic parallel reductions")


_FLAG_KEYS = {
    "k": "k", "dh": "d_h", "lr": "lr", "epochs": "epochs", "alpha": "alpha",
    "gamma": "gamma", "batch_size": "batch_size", "eps_clamp": "eps_clamp",
    "seed": "seed", "candidate_size": "candidate_size", "p": "p", "q": "q",
    "normalize_features": "normalize_features", "fast": "fast",
}


def resolve_config(args) -> dict:
    """defaults <- config file <- explicit flags."""
    resolved = dict(DEFAULTS)
    config_path = getattr(args, "config", None)
    if config_path is not None:
        try:
            with open(config_path) as fh:
                file_values = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{config_path}: invalid JSON ({exc})") from None
        unknown = set(file_values) - set(_FLAG_KEYS.values())
        if unknown:
            raise ConfigError(
                f"{config_path}: unknown config keys {sorted(unknown)}"
            )
        resolved.update(file_values)
    for attr, key in _FLAG_KEYS.items():
        value = getattr(args, attr, None)
        if value is not None:
            resolved[key] = value
    return resolved


def _training_config(resolved):
    from .training import TrainingConfig

    cfg = TrainingConfig(
        k=resolved["k"], d_h=resolved["d_h"], lr=resolved["lr"],
        epochs=resolved["epochs"], alpha=resolved["alpha"],
        gamma=resolved["gamma"], batch_size=resolved["batch_size"],
        seed=resolved["seed"], eps_clamp=resolved["eps_clamp"],
    )
    cfg.validate()
    return cfg


def _write_json(path, payload) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _write_manifest(out_dir: Path, command: str, resolved: dict,
                    inputs: dict, outputs: dict) -> None:
    _write_json(out_dir / "manifest.json", {
        "command": command,
        "seed": resolved.get("seed"),
        "config": resolved,
        "inputs": {k: str(v) for k, v in inputs.items()},
        "outputs": {k: str(v) for k, v in outputs.items()},
    })


def _ensure_out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_graph(args, resolved):
    from .graphio import load_graph

    return load_graph(args.edges, args.features,
                      l1_normalize=resolved["normalize_features"])


def _load_prep(args, resolved):
    """Preprocessed features either from dumps or by propagating the graph."""
    from . import propagation

    if args.ego is not None or args.neighbor is not None:
        if args.ego is None or args.neighbor is None:
            raise ConfigError("--ego and --neighbor must be given together")
        return propagation.load_preprocessed(args.ego, args.neighbor, resolved["k"])
    if args.edges is None or args.features is None:
        raise ConfigError(
            "provide either --ego/--neighbor or --edges/--features"
        )
    graph = _load_graph(args, resolved)
    return propagation.anonymized_propagate(graph, resolved["k"])


def _injection_params(resolved) -> tuple[int, int]:
    p, q = resolved.get("p"), resolved.get("q")
    if p is None or q is None:
        raise ConfigError("clique size --p and clique count --q are required")
    return p, q


def cmd_inject(args) -> int:
    from .graphio import save_graph, save_labels
    from .injection import InjectionConfig, inject_anomalies

    resolved = resolve_config(args)
    p, q = _injection_params(resolved)
    graph = _load_graph(args, resolved)
    cfg = InjectionConfig(p=p, q=q,
                          candidate_size=resolved["candidate_size"],
                          seed=resolved["seed"])
    injected, labels, provenance = inject_anomalies(graph, cfg)
    out = _ensure_out_dir(args)
    save_graph(injected, out / "edges.txt", out / "features.txt")
    save_labels(out / "labels.txt", labels)
    provenance["config"] = resolved
    _write_json(out / "provenance.json", provenance)
    _write_manifest(out, "inject", resolved,
                    {"edges": args.edges, "features": args.features},
                    {"edges": out / "edges.txt", "features": out / "features.txt",
                     "labels": out / "labels.txt",
                     "provenance": out / "provenance.json"})
    return EXIT_OK


def cmd_preprocess(args) -> int:
    from . import propagation

    resolved = resolve_config(args)
    graph = _load_graph(args, resolved)
    prep = propagation.anonymized_propagate(graph, resolved["k"])
    out = _ensure_out_dir(args)
    propagation.save_preprocessed(prep, out / "ego.txt", out / "neighbor.txt")
    _write_manifest(out, "preprocess", resolved,
                    {"edges": args.edges, "features": args.features},
                    {"ego": out / "ego.txt", "neighbor": out / "neighbor.txt"})
    return EXIT_OK


def cmd_train(args) -> int:
    from . import training
    from .model import save_checkpoint

    resolved = resolve_config(args)
    cfg = _training_config(resolved)
    out = _ensure_out_dir(args)
    log_path = out / "train_log.txt"
    with open(log_path, "w") as log:
        def on_epoch(stats):
            log.write(f"{stats.epoch}\t{stats.mean_loss:.10g}\t"
                      f"{stats.seconds:.6f}\n")

        if args.ego is not None or args.neighbor is not None:
            prep = _load_prep(args, resolved)
            params = training.train_preprocessed(prep, cfg, on_epoch)
        else:
            if args.edges is None or args.features is None:
                raise ConfigError(
                    "provide either --ego/--neighbor or --edges/--features"
                )
            graph = _load_graph(args, resolved)
            params = training.train(graph, cfg, on_epoch)
    checkpoint = out / "checkpoint.bin"
    save_checkpoint(checkpoint, params, meta={"seed": resolved["seed"],
                                              "config": resolved})
    _write_manifest(out, "train", resolved,
                    {k: getattr(args, k) for k in
                     ("edges", "features", "ego", "neighbor")
                     if getattr(args, k) is not None},
                    {"checkpoint": checkpoint, "train_log": log_path})
    return EXIT_OK


def _score_and_maybe_eval(args, resolved, out: Path, labels_path) -> dict:
    from .graphio import load_labels
    from .metrics import (ScoreReport, evaluate, save_metrics_json,
                          save_scores, score)
    from .model import load_checkpoint

    params, _ = load_checkpoint(args.checkpoint)
    prep = _load_prep(args, resolved)
    scores = score(params, prep)
    scores_path = out / "scores.txt"
    save_scores(scores_path, scores)
    outputs = {"scores": scores_path}
    if labels_path is not None:
        labels = load_labels(labels_path, n=scores.size)
        report = evaluate(scores, labels)
        metrics_path = out / "metrics.json"
        save_metrics_json(metrics_path, report,
                          extra={"seed": resolved["seed"], "config": resolved})
        outputs["metrics"] = metrics_path
    return outputs


def cmd_score(args) -> int:
    resolved = resolve_config(args)
    out = _ensure_out_dir(args)
    outputs = _score_and_maybe_eval(args, resolved, out, None)
    _write_manifest(out, "score", resolved,
                    {"checkpoint": args.checkpoint}, outputs)
    return EXIT_OK


def cmd_eval(args) -> int:
    resolved = resolve_config(args)
    out = _ensure_out_dir(args)
    outputs = _score_and_maybe_eval(args, resolved, out, args.labels)
    _write_manifest(out, "eval", resolved,
                    {"checkpoint": args.checkpoint}, outputs)
    return EXIT_OK


def cmd_pipeline(args) -> int:
    """inject (optional) -> preprocess -> train -> score -> eval."""
    from . import propagation, training
    from .graphio import load_labels, save_graph, save_labels
    from .injection import InjectionConfig, inject_anomalies
    from .metrics import evaluate, save_metrics_json, save_scores, score
    from .model import save_checkpoint

    resolved = resolve_config(args)
    cfg = _training_config(resolved)
    out = _ensure_out_dir(args)
    graph = _load_graph(args, resolved)
    outputs = {}

    labels = None
    if resolved.get("p") is not None or resolved.get("q") is not None:
        p, q = _injection_params(resolved)
        inj_cfg = InjectionConfig(p=p, q=q,
                                  candidate_size=resolved["candidate_size"],
                                  seed=resolved["seed"])
        graph, labels, provenance = inject_anomalies(graph, inj_cfg)
        save_graph(graph, out / "edges.txt", out / "features.txt")
        save_labels(out / "labels.txt", labels)
        provenance["config"] = resolved
        _write_json(out / "provenance.json", provenance)
        outputs.update({"edges": out / "edges.txt",
                        "features": out / "features.txt",
                        "labels": out / "labels.txt",
                        "provenance": out / "provenance.json"})
    elif args.labels is not None:
        labels = load_labels(args.labels, n=graph.n)

    prep = propagation.anonymized_propagate(graph, cfg.k)
    log_path = out / "train_log.txt"
    with open(log_path, "w") as log:
        params = training.train_preprocessed(
            prep, cfg,
            lambda s: log.write(f"{s.epoch}\t{s.mean_loss:.10g}\t{s.seconds:.6f}\n"),
        )
    checkpoint = out / "checkpoint.bin"
    save_checkpoint(checkpoint, params, meta={"seed": resolved["seed"],
                                              "config": resolved})
    scores = score(params, prep)
    save_scores(out / "scores.txt", scores)
    outputs.update({"checkpoint": checkpoint, "train_log": log_path,
                    "scores": out / "scores.txt"})
    if labels is not None:
        report = evaluate(scores, labels)
        save_metrics_json(out / "metrics.json", report,
                          extra={"seed": resolved["seed"], "config": resolved})
        outputs["metrics"] = out / "metrics.json"
    _write_manifest(out, "pipeline", resolved,
                    {"edges": args.edges, "features": args.features}, outputs)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="egomatch",
        description="Ego-neighbor matching anomaly detection on attributed graphs",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_inject = sub.add_parser("inject", help="plant structural and attribute anomalies")
    _add_config_flag(p_inject)
    _add_graph_inputs(p_inject)
    p_inject.add_argument("--p", type=int, default=None, required=False,
                          help="clique size")
    p_inject.add_argument("--q", type=int, default=None, required=False,
                          help="clique count")
    p_inject.add_argument("--candidate-size", type=int, default=None)
    p_inject.add_argument("--seed", type=int, default=None)
    p_inject.add_argument("--out", type=Path, required=True)
    p_inject.set_defaults(func=cmd_inject)

    p_prep = sub.add_parser("preprocess", help="compute ego/neighbor features once")
    _add_config_flag(p_prep)
    _add_graph_inputs(p_prep)
    p_prep.add_argument("--k", type=int, default=None, help="propagation steps")
    p_prep.add_argument("--out", type=Path, required=True)
    p_prep.set_defaults(func=cmd_preprocess)

    p_train = sub.add_parser("train", help="fit the matching network")
    _add_config_flag(p_train)
    _add_graph_inputs(p_train, required=False)
    p_train.add_argument("--ego", type=Path, default=None,
                         help="precomputed ego features")
    p_train.add_argument("--neighbor", type=Path, default=None,
                         help="precomputed neighbor features")
    _add_training_flags(p_train)
    p_train.add_argument("--out", type=Path, required=True)
    p_train.set_defaults(func=cmd_train)

    for name, func, with_labels in (("score", cmd_score, False),
                                    ("eval", cmd_eval, True)):
        p_cmd = sub.add_parser(
            name,
            help="score nodes" if name == "score"
            else "score nodes and evaluate against labels",
        )
        _add_config_flag(p_cmd)
        p_cmd.add_argument("--checkpoint", type=Path, required=True)
        _add_graph_inputs(p_cmd, required=False)
        p_cmd.add_argument("--ego", type=Path, default=None)
        p_cmd.add_argument("--neighbor", type=Path, default=None)
        p_cmd.add_argument("--k", type=int, default=None)
        if with_labels:
            p_cmd.add_argument("--labels", type=Path, default=None,
                               help="ground-truth labels (omit to score only)")
        p_cmd.add_argument("--seed", type=int, default=None)
        p_cmd.add_argument("--out", type=Path, required=True)
        p_cmd.set_defaults(func=func)

    p_pipe = sub.add_parser("pipeline",
                            help="inject (optional), train, score, evaluate")
    _add_config_flag(p_pipe)
    _add_graph_inputs(p_pipe)
    p_pipe.add_argument("--labels", type=Path, default=None,
                        help="ground-truth labels of an already-injected graph")
    p_pipe.add_argument("--p", type=int, default=None, help="clique size")
    p_pipe.add_argument("--q", type=int, default=None, help="clique count")
    p_pipe.add_argument("--candidate-size", type=int, default=None)
    _add_training_flags(p_pipe)
    p_pipe.add_argument("--out", type=Path, required=True)
    p_pipe.set_defaults(func=cmd_pipeline)

    return parser


def main(argv=None) -> int:
    _configure_threads()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (EgomatchError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception:
        traceback.print_exc()
        return EXIT_INTERNAL


def run() -> None:
    sys.exit(main())
