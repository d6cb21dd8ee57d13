"""Command-line entry point.

Exit codes: 0 success (or "fits" for ``gate``), 2 ``gate`` says it does not
fit, 1 any error.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .advisor import ModelBundle, estimate_from_prediction, recommend, sweep_candidates, train_bundle
from .automata import extract_features, parse_automaton
from .capacity import gate, load_profile
from .dataset import TARGETS, dump_records, load_records, split_train_test
from .errors import OverlayAdvisorError
from .forest import ForestConfig
from .overlay import (
    BUS_WIDTH_CEILING,
    OverlayConfig,
    ResourceEstimate,
    default_coefficients,
    estimate_resources,
    generate_synthetic_dataset,
    load_coefficients,
    map_automaton,
)
from .report import (
    RunManifest,
    compare,
    recommendation_text,
    recommendation_to_dict,
    render_csv,
    render_figures,
    render_text,
    verdict_text,
)

DEFAULT_SEED = 42
EXIT_OK, EXIT_ERROR, EXIT_NO_FIT = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse would exit 2, which means "no fit" here
        raise UsageError(f"{self.prog}: {message}")


def _int_list(text: str) -> list[int]:
    try:
        values = [int(v) for v in text.replace(" ", "").split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _size(text: str) -> int:
    # accepts 4096, 4k, 4K
    t = text.strip().lower()
    try:
        return int(t[:-1]) * 1024 if t.endswith("k") else int(t)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a size: {text!r}") from None


def _size_list(text: str) -> list[int]:
    return [_size(v) for v in text.split(",") if v.strip()]


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8", newline="\n")


def _read(path: str) -> str:
    return Path(path).read_text(encoding="utf-8")


def _config_from_args(args) -> OverlayConfig:
    """Explicit --num-ste wins; otherwise the smallest overlay the automaton needs."""
    if args.num_ste is not None:
        return OverlayConfig(args.num_ste, args.fanout_limit, args.bus_width)
    if getattr(args, "automaton", None):
        fv = extract_features(parse_automaton(_read(args.automaton)))
        return OverlayConfig(max(fv.num_states, 1), max(fv.max_fan_out, 1), args.bus_width)
    raise UsageError("give --num-ste (and optionally --fanout-limit) or --automaton")


def cmd_synth(args) -> int:
    co = load_coefficients(args.coefficients) if args.coefficients else default_coefficients()
    sizes = args.sizes or [args.start << i for i in range(args.doublings + 1)]
    configs = [
        OverlayConfig(n, f, args.bus_width)
        for n in sizes
        for f in args.fanouts
        for _ in range(args.replicates)
    ]
    records = generate_synthetic_dataset(configs, co, args.noise, args.seed)
    manifest = RunManifest(
        "synth",
        {"coefficients": args.coefficients or "<builtin>"},
        args.seed,
        {"sizes": sizes, "fanouts": args.fanouts, "replicates": args.replicates,
         "noise": args.noise, "bus_width": args.bus_width},
    )
    _write(args.out, dump_records(records, manifest.comment_line()))
    return EXIT_OK


def _forest_config(args) -> ForestConfig:
    return ForestConfig(
        n_trees=args.n_trees,
        max_depth=args.max_depth,
        min_samples_leaf=args.min_samples_leaf,
        min_samples_split=args.min_samples_split,
        feature_fraction=args.feature_fraction,
        bootstrap=not args.no_bootstrap,
        seed=args.seed,
    )


def cmd_train(args) -> int:
    records = load_records(_read(args.records))
    if not records:
        raise OverlayAdvisorError(f"{args.records}: dataset is empty")
    unknown = [t for t in args.targets if t not in TARGETS]
    if unknown:
        raise OverlayAdvisorError(
            f"unknown target(s) {', '.join(unknown)}; valid targets: {', '.join(TARGETS)}"
        )
    cfg = _forest_config(args)
    train, test = records, []
    if args.test_fraction:
        train, test = split_train_test(records, args.test_fraction, args.seed)
    manifest = RunManifest(
        "train",
        {"records": args.records},
        args.seed,
        {"targets": list(args.targets), "forest": asdict(cfg), "test_fraction": args.test_fraction},
    )
    bundle = train_bundle(train, args.targets, cfg, manifest.to_dict(), n_jobs=args.jobs)
    _write(args.out, bundle.dumps())
    if args.test_out:
        _write(args.test_out, dump_records(test, manifest.comment_line()))
    elif test:
        warnings.warn(f"{len(test)} held-out records discarded; pass --test-out to keep them",
                      stacklevel=1)
    return EXIT_OK


def cmd_predict(args) -> int:
    bundle = ModelBundle.loads(_read(args.model))
    cfg = _config_from_args(args)
    predicted = bundle.predict(cfg.features())
    outside = bundle.outside_range(cfg.features())
    if args.json:
        doc = {
            "manifest": RunManifest("predict", {"model": args.model}, args.seed,
                                    {"config": asdict(cfg)}).to_dict(),
            "config": asdict(cfg),
            "predicted": predicted,
            "extrapolation_warning": bool(outside),
        }
        _write(args.out, json.dumps(doc, indent=2) + "\n")
    else:
        lines = [f"num_ste={cfg.num_ste} fanout_limit={cfg.fanout_limit}"]
        lines += [f"  {t:<10} {v:.2f}" for t, v in predicted.items()]
        if outside:
            lines.append(f"warning: {', '.join(outside)} outside training range; "
                         "prediction is clamped to the training targets")
        _write(args.out, "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    bundle = ModelBundle.loads(_read(args.model))
    records = load_records(_read(args.records))
    if not records:
        raise OverlayAdvisorError(f"{args.records}: no records to evaluate")
    comparisons = compare(bundle, records)
    manifest = RunManifest("evaluate", {"model": args.model, "records": args.records}, args.seed)
    _write(args.out, render_text(manifest, comparisons))
    csv_path = args.csv
    if csv_path is None and args.out not in (None, "-"):
        csv_path = str(Path(args.out).with_suffix(".csv"))
    if csv_path:
        _write(csv_path, render_csv(manifest, comparisons))
    if args.figures:
        render_figures(comparisons, args.figures)
    return EXIT_OK


def cmd_gate(args) -> int:
    profile = load_profile(args.profile)
    direct = (args.luts, args.ffs, args.mem_bits)
    mapping = None
    if args.model:
        bundle = ModelBundle.loads(_read(args.model))
        cfg = _config_from_args(args)
        est = estimate_from_prediction(cfg, bundle.predict(cfg.features()))
        if args.automaton:
            mapping = map_automaton(parse_automaton(_read(args.automaton)), cfg)
    elif args.coefficients:
        cfg = _config_from_args(args)
        est = estimate_resources(cfg, load_coefficients(args.coefficients))
    elif any(v is not None for v in direct):
        luts, ffs, mem = (v or 0 for v in direct)
        est = ResourceEstimate(luts=luts, ffs=ffs, mem_bits=mem, wires=0, fanout=0)
    else:
        raise UsageError("give --model, --coefficients, or direct --luts/--ffs/--mem-bits")
    verdict = gate(est, profile, args.ceiling)
    fits = verdict.fits and (mapping is None or mapping.fits)
    if args.json:
        doc = {
            "manifest": RunManifest("gate", {"model": args.model or ""}, args.seed,
                                    {"profile": profile.name, "ceiling": args.ceiling}).to_dict(),
            "estimate": asdict(est),
            "verdict": verdict.to_dict(),
            "fits": fits,
        }
        if mapping is not None:
            doc["mapping"] = {"fits": mapping.fits, "failures": [asdict(f) for f in mapping.failures]}
        _write(args.out, json.dumps(doc, indent=2) + "\n")
    else:
        text = f"device {profile.name}\n" + verdict_text(verdict) + "\n"
        if mapping is not None and not mapping.fits:
            text += "".join(f"automaton does not map: {f.constraint} needs {f.required}, "
                            f"overlay has {f.available}\n" for f in mapping.failures)
        _write(args.out, text)
    return EXIT_OK if fits else EXIT_NO_FIT


def cmd_recommend(args) -> int:
    bundle = ModelBundle.loads(_read(args.model))
    profile = load_profile(args.profile)
    candidates = sweep_candidates(args.start, args.doublings, args.fanout_limit, args.bus_width)
    rec = recommend(candidates, bundle, profile, args.ceiling)
    manifest = RunManifest(
        "recommend", {"model": args.model}, args.seed,
        {"start": args.start, "doublings": args.doublings, "fanout_limit": args.fanout_limit,
         "bus_width": args.bus_width, "profile": profile.name, "ceiling": args.ceiling},
    )
    if args.json:
        _write(args.out, json.dumps(recommendation_to_dict(manifest, rec), indent=2) + "\n")
    else:
        _write(args.out, recommendation_text(manifest, rec))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=DEFAULT_SEED, help="random seed (default 42)")
    common.add_argument("--out", default=None, help="output path (default stdout)")

    overlay = _Parser(add_help=False)
    overlay.add_argument("--num-ste", type=_size, help="STE+ count, e.g. 4096 or 4k")
    overlay.add_argument("--fanout-limit", type=int, default=16)
    overlay.add_argument("--bus-width", type=int, default=BUS_WIDTH_CEILING)
    overlay.add_argument("--automaton", help="edge-list file; sizes the overlay unless --num-ste is given")

    device = _Parser(add_help=False)
    device.add_argument("--profile", default="zcu104", help="builtin name or key-value file")
    device.add_argument("--ceiling", type=float, default=100.0, help="utilization ceiling in percent")

    p = _Parser(prog="overlay-advisor", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("synth", parents=[common], help="generate synthetic compile records")
    s.add_argument("--coefficients", help="cost coefficient file (default: builtin)")
    s.add_argument("--sizes", type=_size_list, help="comma-separated STE+ counts, e.g. 1k,2k,4k")
    s.add_argument("--start", type=_size, default=1024)
    s.add_argument("--doublings", type=int, default=3)
    s.add_argument("--fanouts", type=_int_list, default=[16], help="comma-separated fanout limits")
    s.add_argument("--replicates", type=int, default=1)
    s.add_argument("--bus-width", type=int, default=BUS_WIDTH_CEILING)
    s.add_argument("--noise", type=float, default=0.0)
    s.set_defaults(func=cmd_synth)

    t = sub.add_parser("train", parents=[common], help="train one forest per target")
    t.add_argument("records")
    t.add_argument("--targets", type=lambda v: [x for x in v.split(",") if x], default=list(TARGETS))
    t.add_argument("--n-trees", type=int, default=100)
    t.add_argument("--max-depth", type=int, default=None)
    t.add_argument("--min-samples-leaf", type=int, default=1)
    t.add_argument("--min-samples-split", type=int, default=2)
    t.add_argument("--feature-fraction", type=float, default=1.0)
    t.add_argument("--no-bootstrap", action="store_true")
    t.add_argument("--jobs", type=int, default=1, help="threads for tree building")
    t.add_argument("--test-fraction", type=float, default=0.0, help="hold out this share of records")
    t.add_argument("--test-out", help="write held-out records here")
    t.set_defaults(func=cmd_train)

    pr = sub.add_parser("predict", parents=[common, overlay], help="predict resources")
    pr.add_argument("--model", required=True)
    pr.add_argument("--json", action="store_true")
    pr.set_defaults(func=cmd_predict)

    e = sub.add_parser("evaluate", parents=[common], help="predicted-vs-actual report")
    e.add_argument("records")
    e.add_argument("--model", required=True)
    e.add_argument("--csv", help="plot-data CSV (default: --out with .csv suffix)")
    e.add_argument("--figures", help="directory for rendered PNG figures")
    e.set_defaults(func=cmd_evaluate)

    g = sub.add_parser("gate", parents=[common, overlay, device], help="fit / no-fit check")
    g.add_argument("--model")
    g.add_argument("--coefficients", help="gate the analytic estimate instead of a model")
    g.add_argument("--luts", type=int)
    g.add_argument("--ffs", type=int)
    g.add_argument("--mem-bits", type=int)
    g.add_argument("--json", action="store_true")
    g.set_defaults(func=cmd_gate)

    r = sub.add_parser("recommend", parents=[common, device], help="largest feasible overlay")
    r.add_argument("--model", required=True)
    r.add_argument("--start", type=_size, default=1024)
    r.add_argument("--doublings", type=int, default=3)
    r.add_argument("--fanout-limit", type=int, default=16)
    r.add_argument("--bus-width", type=int, default=BUS_WIDTH_CEILING)
    r.add_argument("--json", action="store_true")
    r.set_defaults(func=cmd_recommend)
    return p


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (OverlayAdvisorError, OSError, ValueError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
