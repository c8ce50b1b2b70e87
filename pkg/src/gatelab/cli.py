"""Command-line operator surface.

Subcommands: gen, train, eval, inspect-gates, gradcheck, params, serve.
Every command is deterministic: the same config, seed, and inputs produce
byte-identical output files.

Exit codes: 0 success; 1 gradient check failed; 2 configuration or usage
error; 3 data error (datasets, manifests, checkpoints); 4 numerical
failure (non-finite loss).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import ops
from .cells import VARIANTS, parameter_report
from .config import RunConfig, apply_overrides, load_config
from .errors import ConfigError, DataError, NumericalError

EXIT_OK = 0
EXIT_GRADCHECK = 1
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4


def _add_common(p: argparse.ArgumentParser, *, out_required: bool = False) -> None:
    p.add_argument("--config", type=Path, default=None, help="key=value config file")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--out", type=Path, required=out_required, default=None,
                   help="output directory")
    p.add_argument("--set", dest="overrides", action="append", default=[],
                   metavar="KEY=VALUE", help="override any config key")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gatelab",
        description="recurrent-gate laboratory: synthetic benchmark, exact-"
                    "gradient training, calibrated AP evaluation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate the synthetic dataset")
    _add_common(p, out_required=True)
    p.add_argument("--chunks", type=int, default=None,
                   help="exact chunk budget for the train split")

    p = sub.add_parser("train", help="train a model on a dataset manifest")
    _add_common(p, out_required=True)
    p.add_argument("--data", type=Path, default=None, help="dataset manifest")
    p.add_argument("--variant", choices=VARIANTS, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--max-steps", type=int, default=None)
    p.add_argument("--resume", type=Path, default=None,
                   help="checkpoint to resume from")
    p.add_argument("--eval-mcap", action="store_true",
                   help="log eval-split mcAP at every epoch end")

    p = sub.add_parser("eval", help="evaluate a checkpoint (mAP/mcAP/portion)")
    _add_common(p)
    p.add_argument("--checkpoint", type=Path, default=None)
    p.add_argument("--data", type=Path, default=None)
    p.add_argument("--split", default="eval")

    p = sub.add_parser("inspect-gates", help="dump per-step gate traces")
    _add_common(p, out_required=True)
    p.add_argument("--checkpoint", type=Path, default=None)
    p.add_argument("--data", type=Path, default=None)
    p.add_argument("--split", default="eval")

    p = sub.add_parser("gradcheck", help="analytic vs finite-difference gradients")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--variant", choices=VARIANTS + ("all",), default="all")

    p = sub.add_parser("params", help="exact parameter counts and unit ratios")
    p.add_argument("--input-dim", type=int, default=3072)
    p.add_argument("--hidden", type=int, default=512)
    p.add_argument("--embed", type=int, default=512)
    p.add_argument("--actions", type=int, default=20)
    p.add_argument("--bias", action="store_true",
                   help="count bias vectors as well (off by default)")

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)

    return parser


def _load_cfg(args) -> RunConfig:
    cfg = load_config(args.config)
    overrides: dict[str, str] = {}
    for item in getattr(args, "overrides", []):
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        overrides[key.strip()] = value.strip()
    for flag in ("seed", "variant", "lr", "epochs"):
        value = getattr(args, flag, None)
        if value is not None:
            overrides[flag] = str(value)
    if overrides:
        cfg = apply_overrides(cfg, overrides, where="command line")
    return cfg


def _path_from(args, cfg: RunConfig, flag: str, required: bool = True) -> Path | None:
    value = getattr(args, flag, None)
    if value is None:
        fallback = getattr(cfg, "data" if flag == "data" else flag, "")
        value = Path(fallback) if fallback else None
    if value is None and required:
        raise ConfigError(f"--{flag} is required (flag or config key)")
    return value


def cmd_gen(args) -> int:
    cfg = _load_cfg(args)
    result = ops.run_gen(cfg, args.out, chunks=args.chunks)
    print(f"manifest: {result.manifest}")
    for split in sorted(result.counts):
        print(f"{split} records: {result.counts[split]}")
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = _load_cfg(args)
    manifest = _path_from(args, cfg, "data")
    result = ops.run_train(
        cfg, manifest, args.out, max_steps=args.max_steps,
        eval_mcap=args.eval_mcap, resume_from=args.resume,
    )
    print(f"checkpoint: {result.checkpoint}")
    print(f"log: {result.log}")
    print(f"steps: {result.steps}")
    print(f"final_epoch_loss: {result.final_loss!r}")
    if result.final_mcap is not None:
        print(f"final_eval_mcap: {result.final_mcap!r}")
    return EXIT_OK


def cmd_eval(args) -> int:
    cfg = _load_cfg(args)
    checkpoint = _path_from(args, cfg, "checkpoint")
    manifest = _path_from(args, cfg, "data")
    result = ops.run_eval(checkpoint, manifest, split=args.split, out_dir=args.out)
    print(f"frames_scored: {result.num_frames}")
    print(f"mAP: {result.report.mean_ap!r}")
    print(f"mcAP: {result.report.mean_cap!r}")
    for k in sorted(result.report.per_class_ap):
        print(f"class {k}: AP={result.report.per_class_ap[k]!r} "
              f"cAP={result.report.per_class_cap[k]!r}")
    for k in result.report.skipped_classes:
        print(f"class {k}: skipped (no positive frames)")
    if args.out:
        print(f"metrics_csv: {result.metrics_csv}")
        print(f"portion_csv: {result.portion_csv}")
        print(f"scores_tsv: {result.scores_tsv}")
    return EXIT_OK


def cmd_inspect_gates(args) -> int:
    cfg = _load_cfg(args)
    checkpoint = _path_from(args, cfg, "checkpoint")
    manifest = _path_from(args, cfg, "data")
    result = ops.run_inspect_gates(checkpoint, manifest, args.split, args.out)
    print(f"gates_csv: {result.csv}")
    print(f"rows: {result.rows}")
    if result.gate_gap is not None:
        print(f"update_gate_gap: {result.gate_gap!r}")
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    variants = None if args.variant == "all" else [args.variant]
    report = ops.run_gradcheck(variants, seed=args.seed)
    print(f"{'variant':<8} {'matrix':<8} {'max_rel_err':>14} status")
    for e in report.entries:
        status = "pass" if e.passed else "FAIL"
        print(f"{e.variant:<8} {e.matrix:<8} {e.max_rel_err:>14.3e} {status}")
    if not report.all_passed:
        failing = [f"{e.variant}/{e.matrix}" for e in report.entries if not e.passed]
        print(f"FAILED: {', '.join(failing)}", file=sys.stderr)
        return EXIT_GRADCHECK
    print("all gradients match finite differences")
    return EXIT_OK


def cmd_params(args) -> int:
    report = parameter_report(args.input_dim, args.hidden, args.embed,
                              args.actions, bias=args.bias)
    for key in ("input_dim", "hidden_dim", "embed_dim", "num_classes", "bias"):
        print(f"{key}: {report[key]}")
    print(f"gru_closed_form: {report['gru_closed_form']}")
    print(f"gru_tally: {report['gru_tally']}")
    print(f"idu_closed_form: {report['idu_closed_form']}")
    print(f"idu_tally: {report['idu_tally']}")
    print(f"head_params: {report['head_params']}")
    print(f"ratio_unit: {report['ratio_unit']:.4f}")
    print(f"ratio_unit_with_classifier: {report['ratio_unit_with_classifier']:.4f}")
    print(f"ratio_with_head: {report['ratio_with_head']:.4f}")
    print(f"reference_ratio: {report['reference_ratio']}")
    print(f"note: {report['note']}")
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service.app import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return EXIT_OK


_COMMANDS = {
    "gen": cmd_gen,
    "train": cmd_train,
    "eval": cmd_eval,
    "inspect-gates": cmd_inspect_gates,
    "gradcheck": cmd_gradcheck,
    "params": cmd_params,
    "serve": cmd_serve,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


def entry() -> None:
    sys.exit(main())
