"""Command-line interface: the pipeline as deterministic subcommands.

Exit codes: 0 success, 1 validation error, 2 I/O error. Diagnostics go to
stderr; data goes to files or stdout. Flag precedence: command line wins
over `key = value` config-file entries, which win over built-in defaults.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import annotations as ann
from . import dataset as ds
from . import enhance as enh
from . import evaluation as ev
from . import image_core as ic
from . import porometry as por
from . import report as rpt
from . import synthgen as sg
from .errors import (
    InvalidConfig,
    IoError,
    IoFailure,
    MalformedInput,
    SemPipeError,
    ValidationError,
)


def _pmap(fn, items, jobs: int):
    """Ordered parallel map; byte-identical output for any job count."""
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, items))


def _parse_tile_grid(text: str) -> tuple[int, int]:
    try:
        cols, rows = text.lower().split("x")
        return int(cols), int(rows)
    except ValueError as exc:
        raise InvalidConfig(f"bad tile grid {text!r}, expected COLSxROWS") from exc


def _load_config_file(path: str) -> dict[str, str]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise IoFailure(f"cannot read config {path}: {exc}") from exc
    values: dict[str, str] = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidConfig(f"{path}:{line_no}: expected key = value")
        key, value = line.split("=", 1)
        values[key.strip().replace("-", "_")] = value.strip()
    return values


# ---------------------------------------------------------------- subcommands


def _cmd_crop(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    results = _pmap(
        lambda p: ic.center_crop(ic.load_image(p), args.side), args.inputs, args.jobs
    )
    for path, img in zip(args.inputs, results):
        ic.save_image(img, out / (Path(path).stem + ".pgm"))
    print(f"cropped {len(results)} image(s)", file=sys.stderr)
    return 0


def _cmd_enhance(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.method == "otsu":
        def work(p):
            mask = enh.otsu_binarize(ic.load_image(p))
            return ic.GrayImage((mask.bits * 255).astype("uint8"))
    else:
        cfg = enh.ClaheConfig(
            tile_grid=_parse_tile_grid(args.tile_grid),
            clip_fraction=args.clip,
            bins=args.bins,
        )
        def work(p):
            return enh.clahe(ic.load_image(p), cfg)
    results = _pmap(work, args.inputs, args.jobs)
    for path, img in zip(args.inputs, results):
        ic.save_image(img, out / (Path(path).stem + ".pgm"))
    print(f"enhanced {len(results)} image(s) via {args.method}", file=sys.stderr)
    return 0


def _cmd_pores(args) -> int:
    bounds = None
    if args.min_area is not None or args.max_area is not None:
        if args.min_area is None or args.max_area is None:
            raise InvalidConfig("give both --min-area and --max-area or neither")
        bounds = (args.min_area, args.max_area)

    def work(p):
        return por.estimate_pore_size(ic.load_image(p), bounds)

    results = _pmap(work, args.inputs, args.jobs)
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["image_id", "pore_area_px", "pore_side_px", "pore_diagonal_px",
                     "components"])
    for path, est in zip(args.inputs, results):
        writer.writerow([
            Path(path).stem,
            f"{est.pore_area_px:.3f}",
            f"{est.pore_side_px:.3f}",
            f"{est.pore_diagonal_px:.3f}",
            est.contributing_components,
        ])
    return 0


def _read_pores_csv(path: str) -> dict[str, float]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None or "image_id" not in reader.fieldnames \
            or "pore_diagonal_px" not in reader.fieldnames:
        raise MalformedInput(f"{path}: expected pores CSV from the `pores` command")
    return {rec["image_id"]: float(rec["pore_diagonal_px"]) for rec in reader}


def _cmd_filter_labels(args) -> int:
    if (args.pore_diagonal is None) == (args.pores_csv is None):
        raise InvalidConfig("give exactly one of --pore-diagonal / --pores-csv")
    diagonals = _read_pores_csv(args.pores_csv) if args.pores_csv else None
    rule = ds.SizeFilterRule(factor=args.factor, mode=ds.SizeFilterMode(args.mode))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["image_id", "kept", "removed"])
    for label_path in sorted(Path(args.labels).glob("*.txt")):
        stem = label_path.stem
        if diagonals is not None:
            if stem not in diagonals:
                raise InvalidConfig(f"no pore diagonal for image {stem}")
            diag = diagonals[stem]
        else:
            diag = args.pore_diagonal
        annots = ann.parse_label_file(label_path.read_text())
        kept, removed = ds.filter_small_particles(
            annots, diag, rule, (args.width, args.height)
        )
        if kept:  # empty images are pruned from the curated corpus
            (out / label_path.name).write_text(ann.write_label_file(kept))
        writer.writerow([stem, len(kept), removed])
    return 0


def _cmd_split(args) -> int:
    entries = ds.read_index(args.index)
    result = ds.stratified_split(entries, args.test_frac, args.val_frac, args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, ids in (("train", result.train), ("val", result.val), ("test", result.test)):
        (out / f"{name}.txt").write_text("".join(i + "\n" for i in ids))
    print(
        f"split {len(entries)} entries: {len(result.train)} train, "
        f"{len(result.val)} val, {len(result.test)} test",
        file=sys.stderr,
    )
    return 0


def _cmd_classify(args) -> int:
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["image_id", "index", "class", "elongation"])
    for label_path in sorted(Path(args.labels).glob("*.txt")):
        annots = ann.parse_label_file(label_path.read_text())
        for i, a in enumerate(annots):
            m = ann.shape_metrics(a.polygon, args.width, args.height)
            cls = ann.classify_fiber(m, args.ratio)
            writer.writerow([label_path.stem, i, cls.value, f"{m.elongation:.4f}"])
    return 0


def _load_label_dir(path: str, expect_confidence: bool) -> dict[str, list]:
    result = {}
    for label_path in sorted(Path(path).glob("*.txt")):
        result[label_path.stem] = ann.parse_label_file(
            label_path.read_text(), expect_confidence=expect_confidence
        )
    return result


def _cmd_evaluate(args) -> int:
    gt = _load_label_dir(args.gt, expect_confidence=False)
    if args.pred_format == "pred":
        pred = _load_label_dir(args.pred, expect_confidence=True)
    else:  # ground-truth-format predictions, assumed confidence 1.0
        pred = {
            stem: [
                ann.Annotation(a.category_id, a.polygon, confidence=1.0)
                for a in annots
            ]
            for stem, annots in _load_label_dir(args.pred, expect_confidence=False).items()
        }
    rep = ev.compute_metrics(pred, gt, ev.MatchConfig(), (args.width, args.height))
    row = rpt.report_row(args.model, rep)
    if args.out:
        rpt.write_eval_csv([row], args.out)
    else:
        sys.stdout.write(rpt.format_report([row], "csv"))
    if args.per_image:
        rpt.write_per_image_csv(rep, args.per_image)
    print(
        f"evaluated {len(gt)} image(s): f1={rep.f1:.3f} map50={rep.map50:.3f}",
        file=sys.stderr,
    )
    return 0


def _cmd_synth(args) -> int:
    cfg = sg.SynthConfig(
        image_side=args.side,
        pitch=args.pitch,
        pore_side=args.pore_side,
        skew_deg=args.skew,
        n_particles=args.particles,
        fiber_fraction=args.fiber_fraction,
        illumination_gradient=args.gradient,
        noise_sigma=args.noise,
        seed=args.seed,
    )
    index = sg.generate_dataset(cfg, args.images, args.out, jobs=args.jobs)
    print(f"wrote {args.images} synthetic image(s), index {index}", file=sys.stderr)
    return 0


def _cmd_report(args) -> int:
    try:
        text = Path(args.input).read_text()
    except OSError as exc:
        raise IoFailure(f"cannot read {args.input}: {exc}") from exc
    rows = rpt.read_eval_csv(text)
    rendered = rpt.format_report(rows, args.format)
    if args.out:
        Path(args.out).write_text(rendered)
    else:
        sys.stdout.write(rendered)
    if args.figures:
        if rows:
            paths = rpt.render_figures(rows, args.figures)
            print(f"figures: {', '.join(str(p) for p in paths)}", file=sys.stderr)
        else:
            print("no rows; skipping figures", file=sys.stderr)
    return 0


# ------------------------------------------------------------------- parsing


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(
        prog="sempipe",
        description="SEM filter-image analysis pipeline "
        "(config file values are overridden by command-line flags)",
    )
    parser.add_argument("--config", help="key = value config file")
    subs = parser.add_subparsers(dest="command", required=True)
    sp: dict[str, argparse.ArgumentParser] = {}

    def add(name, func, **kw):
        p = subs.add_parser(name, **kw)
        p.set_defaults(func=func)
        sp[name] = p
        return p

    p = add("crop", _cmd_crop, help="center-crop images to a square side")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--out", required=True)
    p.add_argument("--side", type=int, default=1024)
    p.add_argument("--jobs", type=int, default=1)

    p = add("enhance", _cmd_enhance, help="contrast correction (otsu | clahe)")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--out", required=True)
    p.add_argument("--method", choices=["otsu", "clahe"], required=True)
    p.add_argument("--tile-grid", default="8x8", help="CLAHE tile grid COLSxROWS")
    p.add_argument("--clip", type=float, default=0.01, help="CLAHE clip fraction")
    p.add_argument("--bins", type=int, default=256, help="CLAHE histogram bins")
    p.add_argument("--jobs", type=int, default=1)

    p = add("pores", _cmd_pores, help="estimate filter pore size per image (CSV)")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--min-area", type=float, default=None)
    p.add_argument("--max-area", type=float, default=None)
    p.add_argument("--jobs", type=int, default=1)

    p = add("filter-labels", _cmd_filter_labels,
            help="drop annotations smaller than factor x pore diagonal")
    p.add_argument("--labels", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--pore-diagonal", type=float, default=None)
    p.add_argument("--pores-csv", default=None, help="CSV from the pores command")
    p.add_argument("--factor", type=float, default=0.6)
    p.add_argument("--mode", choices=["max_dim", "min_dim"], default="max_dim")
    p.add_argument("--width", type=int, default=1024)
    p.add_argument("--height", type=int, default=1024)

    p = add("split", _cmd_split, help="stratified train/val/test split")
    p.add_argument("--index", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--test-frac", type=float, default=0.2)
    p.add_argument("--val-frac", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=0)

    p = add("classify", _cmd_classify, help="particle/fiber class per annotation")
    p.add_argument("--labels", required=True)
    p.add_argument("--width", type=int, default=1024)
    p.add_argument("--height", type=int, default=1024)
    p.add_argument("--ratio", type=float, default=3.0)

    p = add("evaluate", _cmd_evaluate, help="score predictions against ground truth")
    p.add_argument("--gt", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--pred-format", choices=["pred", "gt"], default="pred",
                   help="'gt' treats prediction files as ground-truth format "
                        "with confidence 1.0")
    p.add_argument("--width", type=int, default=1024)
    p.add_argument("--height", type=int, default=1024)
    p.add_argument("--model", default="model")
    p.add_argument("--out", default=None, help="write the report CSV here")
    p.add_argument("--per-image", default=None, help="per-image tp/fp/fn CSV")

    p = add("synth", _cmd_synth, help="generate a synthetic ground-truth dataset")
    p.add_argument("--images", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--side", type=int, default=1024)
    p.add_argument("--pitch", type=float, default=40.0)
    p.add_argument("--pore-side", type=float, default=20.0)
    p.add_argument("--skew", type=float, default=0.0)
    p.add_argument("--particles", type=int, default=6)
    p.add_argument("--fiber-fraction", type=float, default=0.0)
    p.add_argument("--gradient", type=float, default=40.0)
    p.add_argument("--noise", type=float, default=6.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)

    p = add("report", _cmd_report, help="render an evaluation CSV as csv/table + figures")
    p.add_argument("input")
    p.add_argument("--format", choices=["csv", "table"], default="csv")
    p.add_argument("--out", default=None)
    p.add_argument("--figures", default=None, help="directory for rendered PNG figures")

    return parser, sp


def run(argv: list[str] | None = None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    parser, subparsers = build_parser()
    try:
        # Pre-scan for --config so its values become subcommand defaults.
        pre = argparse.ArgumentParser(add_help=False)
        pre.add_argument("--config")
        pre_args, _ = pre.parse_known_args(argv)
        if pre_args.config:
            cfg = _load_config_file(pre_args.config)
            for sub in subparsers.values():
                defaults = {}
                for action in sub._actions:
                    if action.dest in cfg:
                        conv = action.type or str
                        defaults[action.dest] = conv(cfg[action.dest])
                if defaults:
                    sub.set_defaults(**defaults)
        try:
            args = parser.parse_args(argv)
        except SystemExit as exc:
            return 0 if exc.code == 0 else 1
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except IoError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 2
    except SemPipeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
