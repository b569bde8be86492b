"""Command-line entry point.

Subcommands: evaluate (contest harness), score (run a scorer over a case
directory), train (fit the patch classifier), synth (generate a synthetic
dataset), mvm (Man-vs-Machine report), pyramid (pre-generate viewer
tiles), serve (HTTP API).

Exit codes: 0 success, 2 input error, 3 internal error.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import charcurve as cc
from . import patchpipe as pp
from .errors import CoverageError, Her2KitError, InputError
from .evalcore import (
    RANK_CRITERIA,
    EvalOptions,
    Her2Score,
    evaluate_submission,
    format_points,
    format_real,
    pooled_agreement_table,
    rank,
)
from .ingest import (
    Fixtures,
    load_fixtures,
    parse_ground_truth,
    parse_submission,
)
from .samme import load_model, save_model, train_samme


def _read_submissions(directory: Path):
    files = sorted(Path(directory).glob("*.csv"))
    if not files:
        raise InputError(f"no submissions found in {directory}")
    return [parse_submission(path, path.stem) for path in files]


def _eval_options(args) -> EvalOptions:
    return EvalOptions(
        eq1_mode=args.eq1_mode, bonus_in_combined=args.include_bonus_in_combined
    )


def _format_value(criterion: str, value: float) -> str:
    if criterion in ("points", "points_plus_bonus"):
        return format_points(value)
    return format_real(value)


def cmd_evaluate(args) -> int:
    gt = parse_ground_truth(Path(args.gt))
    submissions = _read_submissions(Path(args.submissions))
    options = _eval_options(args)
    results = [
        evaluate_submission(gt.rows, sub.team, sub.rows, options) for sub in submissions
    ]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for criterion in RANK_CRITERIA:
        entries = rank(results, criterion)
        lines = ["rank,team,value,tiebreak_note"]
        for e in entries:
            note = e.tiebreak_note or ""
            lines.append(f"{e.rank},{e.team},{_format_value(criterion, e.value)},{note}")
        (out / f"leaderboard_{criterion}.csv").write_text("\n".join(lines) + "\n")
    lines = ["team,case_id,agreement,bonus,weighted_confidence,combined"]
    for res in results:
        for cid, ev in res.per_case.items():
            lines.append(
                f"{res.team},{cid},{format_points(ev.agreement)},{format_points(ev.bonus)},"
                f"{format_real(ev.weighted_confidence)},{format_real(ev.combined)}"
            )
    (out / "per_case.csv").write_text("\n".join(lines) + "\n")
    for res in results:
        for warning in res.warnings:
            print(f"note [{res.team}]: {warning}")
    print(f"evaluated {len(results)} submissions over {len(gt.rows)} cases -> {out}")
    return 0


def _load_case_images(case_dir: Path):
    from .imgproc import load_image

    tiles = sorted((case_dir / "ihc").glob("tile_*.png"))
    if not tiles:
        tiles = sorted(case_dir.glob("*.png")) + sorted(case_dir.glob("*.tif*"))
    if not tiles:
        raise InputError(f"no images found under {case_dir}")
    return [load_image(t) for t in tiles]


def _parse_size(text: str) -> tuple:
    try:
        w, h = text.lower().split("x")
        return int(w), int(h)
    except ValueError:
        raise InputError(f"bad size {text!r}, expected WIDTHxHEIGHT") from None


def cmd_score(args) -> int:
    images_root = Path(args.images)
    case_dirs = sorted(d for d in images_root.iterdir() if d.is_dir())
    if not case_dirs:
        raise InputError(f"no case directories under {images_root}")
    roi_size = _parse_size(args.roi_size)
    model = None
    centroids = None
    if args.method == "patchpipe":
        if not args.model:
            raise InputError("--model is required for the patch pipeline")
        model = load_model(args.model, expected_checksum=pp.FEATURE_CHECKSUM)
    elif args.model:
        centroids = cc.load_centroid_model(args.model)
    rows = ["case_id,score,confidence,pcms,flag"]
    for case_dir in case_dirs:
        images = _load_case_images(case_dir)
        flag = ""
        try:
            if args.method == "charcurve":
                evaluations = []
                for image in images:
                    pred_i, evals = cc.score_slide_charcurve(
                        image, roi_size=roi_size, model=centroids, case_id=case_dir.name
                    )
                    evaluations.extend(evals)
                pred = cc.aggregate_roi_votes(evaluations, case_id=case_dir.name)
            else:
                from .pyramid import mosaic

                slide = mosaic(images)
                pred, _ = pp.score_slide_patchpipe(
                    slide,
                    model,
                    rule=args.rule,
                    pcms_mode=args.pcms,
                    patch_size=args.patch_size,
                    case_id=case_dir.name,
                    jobs=args.jobs,
                )
        except CoverageError as exc:
            flag = "coverage_error"
            print(f"note [{case_dir.name}]: {exc}")
            rows.append(f"{case_dir.name},0,0.0,0,{flag}")
            continue
        pcms = 0.0 if pred.pcms is None else pred.pcms
        rows.append(
            f"{case_dir.name},{pred.score.label},{pred.confidence:.6f},{pcms:.4f},{flag}"
        )
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    Path(args.out).write_text("\n".join(rows) + "\n")
    print(f"scored {len(case_dirs)} cases -> {args.out}")
    return 0


def cmd_train(args) -> int:
    from .imgproc import load_image

    root = Path(args.patches)
    X, y = [], []
    for label_dir in sorted(root.iterdir()):
        if not label_dir.is_dir():
            continue
        try:
            label = int(Her2Score.from_token(label_dir.name))
        except Her2KitError:
            continue
        for path in sorted(label_dir.glob("*.png")):
            X.append(pp.extract_features(load_image(path)))
            y.append(label)
    if not X:
        raise InputError(f"no labeled patches found under {root}")
    X = np.stack(X)
    y = np.array(y)
    if len(np.unique(y)) < 2:
        raise InputError("training requires patches from at least two score classes")
    rng = np.random.default_rng(args.seed)
    order = rng.permutation(len(y))
    split = int(len(y) * 0.75)
    train_idx, held_idx = order[:split], order[split:]
    model = train_samme(
        X[train_idx],
        y[train_idx],
        rounds=args.rounds,
        max_depth=args.depth,
        feature_checksum=pp.FEATURE_CHECKSUM,
    )
    save_model(model, args.out)
    from .samme import predict_samme

    if len(held_idx):
        pred, _ = predict_samme(model, X[held_idx])
        accuracy = float((pred == y[held_idx]).mean())
        print(f"held-out accuracy: {accuracy:.3f} (n={len(held_idx)}, 75/25 split)")
    print(f"trained {len(model.trees)} rounds on {len(train_idx)} patches -> {args.out}")
    return 0


def cmd_synth(args) -> int:
    from .synthgen import generate_dataset, write_dataset

    if args.cases is not None and args.cases % 4 != 0:
        raise InputError("--cases must be a multiple of 4 (balanced classes)")
    per_class = args.per_class if args.cases is None else args.cases // 4
    cases = generate_dataset(
        per_class,
        seed=args.seed,
        tile_count=args.tiles_per_case,
        width=args.width,
        height=args.height,
        cell_count=args.cells,
        noise_sigma=args.noise,
    )
    out = write_dataset(cases, args.out)
    if args.patches_out:
        _export_labeled_patches(cases, Path(args.patches_out), args.patch_size)
    print(f"wrote {len(cases)} cases -> {out}")
    return 0


def _export_labeled_patches(cases, out: Path, patch_size: int) -> None:
    """Cut non-background patches and file them under their case score,
    giving the train subcommand a labeled corpus."""
    from .imgproc import save_image

    count = 0
    for case in cases:
        label_dir = out / str(int(case.score))
        label_dir.mkdir(parents=True, exist_ok=True)
        for t, (image, _) in enumerate(case.tiles):
            grid = pp.tile_image(image, patch_size)
            for (x, y), patch in zip(grid.origins, pp.iter_patches(image, grid)):
                if pp.is_background_mucs(patch):
                    continue
                save_image(label_dir / f"{case.case_id}_t{t}_{x}_{y}.png", patch)
                count += 1
    print(f"exported {count} labeled patches -> {out}")


def cmd_mvm(args) -> int:
    if args.gt:
        gt = parse_ground_truth(Path(args.gt))
        submissions = _read_submissions(Path(args.submissions))
        published = {}
        if args.published:
            published = _read_published(Path(args.published))
    else:
        fixtures: Fixtures = load_fixtures()
        gt = fixtures.mvm_gt
        submissions = list(fixtures.mvm_submissions)
        published = {p.team: p.points for p in fixtures.published_mvm_totals}
    options = _eval_options(args)

    if args.cases:
        event_cases = {
            line.strip()
            for line in Path(args.cases).read_text().splitlines()[1:]
            if line.strip()
        }
    else:
        # the event subset: cases every rater scored (fixture experts
        # scored 15 of 28; machine totals are only comparable there)
        covered = [set(s.case_id for s in sub.rows) for sub in submissions]
        event_cases = set.intersection(*covered) if covered else set(gt.by_case())
        if not event_cases:
            event_cases = set(gt.by_case())

    results = [
        evaluate_submission(gt.rows, sub.team, sub.restricted(event_cases).rows, options)
        for sub in submissions
    ]
    table = pooled_agreement_table(gt.rows, [(s.team, s.score_map()) for s in submissions])

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "pooled_table.csv").write_text(table.render_csv())

    entries = rank(results, "points_plus_bonus")
    by_team = {r.team: r for r in results}
    lines = ["rank,team,points,bonus,points_plus_bonus,note"]
    notes = []
    for e in entries:
        res = by_team[e.team]
        note = ""
        if e.team in published and published[e.team] != res.totals.points:
            note = (
                f"recomputed {format_points(res.totals.points)} differs from published "
                f"{format_points(published[e.team])} (values appear transposed in the summary table)"
            )
            notes.append(f"{e.team}: {note}")
        lines.append(
            f"{e.rank},{e.team},{format_points(res.totals.points)},"
            f"{format_points(res.totals.bonus)},{format_points(res.totals.points_plus_bonus)},{note}"
        )
    (out / "summary.csv").write_text("\n".join(lines) + "\n")
    print(f"man-vs-machine report over {len(event_cases)} event cases -> {out}")
    for line in lines[1:]:
        print("  " + line)
    for note in notes:
        print(f"discrepancy: {note}")
    return 0


def _read_published(path: Path) -> dict:
    published = {}
    for line in path.read_text().splitlines()[1:]:
        if not line.strip():
            continue
        parts = line.split(",")
        published[parts[0]] = float(parts[1])
    return published


def cmd_pyramid(args) -> int:
    from .imgproc import load_image
    from .pyramid import build_case_pyramid, mosaic

    out = Path(args.out)
    if args.dataset:
        root = Path(args.dataset)
        case_dirs = sorted(d for d in root.iterdir() if d.is_dir())
        if not case_dirs:
            raise InputError(f"no case directories under {root}")
        for case_dir in case_dirs:
            stains = {}
            for stain_dir in sorted(d for d in case_dir.iterdir() if d.is_dir()):
                tiles = sorted(stain_dir.glob("tile_*.png"))
                if tiles:
                    stains[stain_dir.name] = mosaic([load_image(t) for t in tiles])
            if stains:
                build_case_pyramid(stains, out, case_dir.name, tile_size=args.tile_size)
        print(f"built pyramids for {len(case_dirs)} cases -> {out}")
        return 0
    if args.gt:
        from .synthgen import generate_case

        gt = parse_ground_truth(Path(args.gt))
        # keep the default cell density regardless of the slide size
        cells = max(30, int(650 * (args.width * args.height) / (900 * 600)))
        for i, rec in enumerate(gt.rows):
            case = generate_case(
                rec.score,
                seed=args.seed + i,
                case_id=rec.case_id,
                width=args.width,
                height=args.height,
                cell_count=cells,
            )
            build_case_pyramid(
                {"ihc": case.tiles[0][0]}, out, rec.case_id, tile_size=args.tile_size
            )
        print(f"synthesized pyramids for {len(gt.rows)} cases -> {out}")
        return 0
    raise InputError("pyramid needs --dataset or --gt")


def cmd_serve(args) -> int:
    import uvicorn

    from .service import ServiceConfig, create_app

    config = ServiceConfig(
        tile_root=Path(args.tile_root),
        log_path=Path(args.log),
        gt_path=Path(args.gt) if args.gt else None,
        machines_dir=Path(args.machines) if args.machines else None,
        session_closed=args.closed,
        options=_eval_options(args),
    )
    app = create_app(config)
    if args.ui:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=args.ui, html=True), name="ui")
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def _add_eval_flags(parser) -> None:
    parser.add_argument(
        "--eq1-mode",
        choices=("corrected", "literal"),
        default="corrected",
        help="weighted-confidence formula variant (default corrected)",
    )
    parser.add_argument(
        "--include-bonus-in-combined",
        action="store_true",
        help="combined points use (agreement + bonus) x w_c",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="her2kit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evaluate", help="score submissions and write leaderboards")
    p.add_argument("--gt", required=True)
    p.add_argument("--submissions", required=True)
    p.add_argument("--out", required=True)
    _add_eval_flags(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("score", help="run an automated scorer over case directories")
    p.add_argument("--images", required=True, help="dataset root (case_*/ihc/*.png)")
    p.add_argument("--method", choices=("charcurve", "patchpipe"), required=True)
    p.add_argument("--model", help="SAMME model (patchpipe) or centroid file (charcurve)")
    p.add_argument("--rule", choices=("indus", "mucs", "visilab"), default="mucs")
    p.add_argument("--pcms", choices=("eq2", "morphological"), default="eq2")
    p.add_argument("--roi-size", default="1800x1200", help="charcurve ROI WxH")
    p.add_argument("--patch-size", type=int, default=128)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("train", help="train the boosted patch classifier")
    p.add_argument("--patches", required=True, help="directory with 0/ 1/ 2/ 3/ subdirs")
    p.add_argument("--rounds", type=int, default=100)
    p.add_argument("--depth", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("synth", help="generate a balanced synthetic dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--per-class", type=int, default=5)
    p.add_argument("--cases", type=int, help="total case count (multiple of 4)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tiles-per-case", type=int, default=1)
    p.add_argument("--width", type=int, default=900)
    p.add_argument("--height", type=int, default=600)
    p.add_argument("--cells", type=int, default=650)
    p.add_argument("--noise", type=float, default=2.0)
    p.add_argument("--patches-out", help="also export labeled patches for training")
    p.add_argument("--patch-size", type=int, default=128)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("mvm", help="man-vs-machine report (bundled fixtures by default)")
    p.add_argument("--gt")
    p.add_argument("--submissions")
    p.add_argument("--published", help="published totals CSV for discrepancy notes")
    p.add_argument("--cases", help="CSV restricting the event case subset")
    p.add_argument("--out", required=True)
    _add_eval_flags(p)
    p.set_defaults(func=cmd_mvm)

    p = sub.add_parser("pyramid", help="pre-generate viewer tile pyramids")
    p.add_argument("--dataset", help="synthetic dataset root to tile")
    p.add_argument("--gt", help="synthesize one slide per ground-truth case")
    p.add_argument("--out", required=True)
    p.add_argument("--tile-size", type=int, default=256)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--width", type=int, default=900)
    p.add_argument("--height", type=int, default=600)
    p.set_defaults(func=cmd_pyramid)

    p = sub.add_parser("serve", help="serve the scoring API")
    # flags win; HER2KIT_* environment variables fill the gaps
    p.add_argument("--tile-root", default=os.environ.get("HER2KIT_TILE_ROOT"),
                   required="HER2KIT_TILE_ROOT" not in os.environ)
    p.add_argument("--gt", default=os.environ.get("HER2KIT_GT"))
    p.add_argument("--machines", help="directory of machine submission CSVs")
    p.add_argument("--log", default=os.environ.get("HER2KIT_LOG", "events.ndjson"))
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=int(os.environ.get("HER2KIT_PORT", "8008")))
    p.add_argument("--closed", action="store_true", help="start with the session closed")
    p.add_argument("--ui", help="directory of built web-client assets to serve")
    _add_eval_flags(p)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Her2KitError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
