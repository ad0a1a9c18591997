"""Command-line entry point: generate, train, eval, infer, report.

Exit codes are stable for scripting: 0 success, 1 usage or configuration
problems, 2 data validation failures, 3 numerical failures. All file output
goes through atomic writes, so an error never leaves a partial file behind.
"""

from __future__ import annotations

import argparse
import io
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import RunConfig, apply_seed, load_config
from .core import (
    SCHEMA_SINGLE,
    SCHEMA_TWO,
    Dataset,
    NodeCoord,
    _fmt,
    atomic_write_text,
    load_dataset,
    read_frames,
    save_dataset,
)
from .errors import (
    ConfigError,
    CoverageError,
    EskinError,
    FactorizationError,
    SingularDesignError,
    UndefinedMetricError,
)
from .evalkit import cross_validate, cross_validate_two, load_report, write_report_files
from .pipeline import (
    TrainedPipeline,
    load_pipeline,
    pipeline_mode,
    predict_single_batch,
    predict_two_batch,
    save_pipeline,
    train_single,
    train_two,
)
from .sim import generate_single_force_dataset, generate_two_force_dataset

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; route them through the exit-code map
    def error(self, message):
        raise ConfigError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON config file (else $ESKIN_CONFIG)")
    common.add_argument("--seed", type=int, help="override every seeded component")

    p = _Parser(
        prog="eskin",
        description="Synthetic capacitive e-skin decoupling toolkit",
    )
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser(
        "generate", parents=[common], help="write a protocol dataset CSV"
    )
    g.add_argument("--mode", choices=[SCHEMA_SINGLE, SCHEMA_TWO], default=SCHEMA_SINGLE)
    g.add_argument("--reps", type=int, help="repetitions per protocol cell")
    g.add_argument("--out", help="dataset CSV path")

    t = sub.add_parser("train", parents=[common], help="fit and save a model bundle")
    t.add_argument("data", help="dataset CSV")
    t.add_argument("--mode", choices=[SCHEMA_SINGLE, SCHEMA_TWO], default=SCHEMA_SINGLE)
    t.add_argument("--out", help="bundle JSON path")

    e = sub.add_parser("eval", parents=[common], help="cross-validate and report")
    e.add_argument("data", help="dataset CSV")
    e.add_argument("--mode", choices=[SCHEMA_SINGLE, SCHEMA_TWO], default=SCHEMA_SINGLE)
    e.add_argument("--k", type=int, help="number of folds")
    e.add_argument("--out", help="report output directory")
    e.add_argument("--emit-heatmaps", action="store_true")

    i = sub.add_parser("infer", parents=[common], help="estimate contacts for frames")
    i.add_argument("--bundle", required=True, help="trained model bundle")
    i.add_argument("--frames", required=True, help="frames CSV (20 channels)")
    i.add_argument("--mode", choices=[SCHEMA_SINGLE, SCHEMA_TWO], default=SCHEMA_SINGLE)
    i.add_argument("--out", help="estimates CSV path")

    r = sub.add_parser("report", parents=[common], help="render a saved report")
    r.add_argument("report_json", help="report.json from a previous eval")
    r.add_argument("--out", help="directory for re-emitted CSV/heatmaps")
    r.add_argument("--emit-heatmaps", action="store_true")
    return p


def _load_run_config(args) -> RunConfig:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = apply_seed(cfg, args.seed)
    return cfg


def _require_mode(ds: Dataset, mode: str) -> None:
    if ds.schema != mode:
        raise ConfigError(
            f"dataset is {ds.schema}-contact but --mode {mode} was requested"
        )


def cmd_generate(args) -> int:
    cfg = _load_run_config(args)
    if args.mode == SCHEMA_SINGLE:
        proto = cfg.single_protocol
        if args.reps is not None:
            proto = replace(proto, reps_per_cell=args.reps)
        ds = generate_single_force_dataset(cfg.model, proto)
        default_name = "dataset_single.csv"
    else:
        proto = cfg.two_protocol
        if args.reps is not None:
            proto = replace(proto, reps=args.reps)
        ds = generate_two_force_dataset(cfg.model, proto)
        default_name = "dataset_two.csv"
    out = Path(args.out) if args.out else Path(cfg.out_dir) / default_name
    out.parent.mkdir(parents=True, exist_ok=True)
    save_dataset(ds, out)
    print(len(ds))
    return EXIT_OK


def _check_full_grid(ds: Dataset) -> None:
    present = {s.node.node_id for s in ds if s.node.is_contact}
    missing = sorted(set(range(1, 101)) - present)
    if missing:
        raise CoverageError(
            f"dataset lacks contact samples for node classes {missing}"
        )


def cmd_train(args) -> int:
    cfg = _load_run_config(args)
    ds = load_dataset(args.data)
    _require_mode(ds, args.mode)
    if args.mode == SCHEMA_SINGLE:
        _check_full_grid(ds)
        p = train_single(ds, cfg.pipeline)
    else:
        p = train_two(ds, cfg.pipeline)
    out = Path(args.out) if args.out else Path(cfg.out_dir) / f"bundle_{args.mode}.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    save_pipeline(p, out)
    print(out)
    return EXIT_OK


def cmd_eval(args) -> int:
    cfg = _load_run_config(args)
    ds = load_dataset(args.data)
    _require_mode(ds, args.mode)
    if args.mode == SCHEMA_SINGLE:
        k = args.k if args.k is not None else cfg.k_single
        report = cross_validate(ds, k, seed=cfg.seed, config=cfg.pipeline)
    else:
        k = args.k if args.k is not None else cfg.k_two
        report = cross_validate_two(ds, k, seed=cfg.seed, config=cfg.pipeline)
    out = Path(args.out) if args.out else Path(cfg.out_dir) / f"report_{args.mode}"
    write_report_files(report, out, emit_heatmaps=args.emit_heatmaps)
    print(report.headline())
    return EXIT_OK


def _estimate_rows_single(p, frames) -> str:
    buf = io.StringIO()
    buf.write("stretch,detected,node_x,node_y,force_n\n")
    if frames:
        x = np.array([f.as_vector() for f in frames])
        out = predict_single_batch(p, x)
        for i in range(len(frames)):
            det = bool(out["detected"][i])
            nx = int(out["x_term"][i]) if det else 0
            ny = int(out["y_term"][i]) if det else 0
            force = float(out["force"][i]) if det else 0.0
            buf.write(
                f"{_fmt(out['stretch'][i])},{int(det)},{nx},{ny},{_fmt(force)}\n"
            )
    return buf.getvalue()


def _estimate_rows_two(p, frames) -> str:
    buf = io.StringIO()
    buf.write("x1,y1,f1_n,x2,y2,f2_n\n")
    if frames:
        x = np.array([f.as_vector() for f in frames])
        out = predict_two_batch(p, x)
        for i in range(len(frames)):
            pairs = sorted(
                (
                    (NodeCoord(int(out["x1"][i]), int(out["y1"][i])), out["force1"][i]),
                    (NodeCoord(int(out["x2"][i]), int(out["y2"][i])), out["force2"][i]),
                ),
                key=lambda nf: nf[0].node_id,
            )
            buf.write(
                ",".join(
                    f"{n.x},{n.y},{_fmt(f)}" for n, f in pairs
                )
                + "\n"
            )
    return buf.getvalue()


def cmd_infer(args) -> int:
    cfg = _load_run_config(args)
    p = load_pipeline(args.bundle)
    if pipeline_mode(p) != args.mode:
        raise ConfigError(
            f"bundle holds a {pipeline_mode(p)}-contact pipeline "
            f"but --mode {args.mode} was requested"
        )
    with open(args.frames) as f:
        frames = read_frames(f)
    if isinstance(p, TrainedPipeline):
        text = _estimate_rows_single(p, frames)
    else:
        text = _estimate_rows_two(p, frames)
    out = Path(args.out) if args.out else Path(cfg.out_dir) / "estimates.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    atomic_write_text(out, text)
    print(out)
    return EXIT_OK


def cmd_report(args) -> int:
    report = load_report(args.report_json)
    if args.out or args.emit_heatmaps:
        out = Path(args.out) if args.out else Path(args.report_json).parent
        write_report_files(report, out, emit_heatmaps=args.emit_heatmaps)
    print(report.headline())
    return EXIT_OK


_COMMANDS = {
    "generate": cmd_generate,
    "train": cmd_train,
    "eval": cmd_eval,
    "infer": cmd_infer,
    "report": cmd_report,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SingularDesignError, FactorizationError, UndefinedMetricError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except EskinError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
