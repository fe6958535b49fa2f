"""Command-line front end: extract, score, evaluate, distort, tilings, histogram, selfcheck."""
import argparse
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np
import pandas as pd

from shared.models import ExportType, MeasureId, Q5Pooling
from app.core.config import settings
from app.core.errors import RRIQAError
from app.core.logger import Logger
from app.schemas.features import FeatureVector
from app.services import bkf, evaluation, report_export, rr_features, selfcheck, tetrolet
from app.services.image_core import add_white_noise, crop_to_multiple, gaussian_blur, load_image, save_image

logger = Logger("cli").get_logger()


def _is_container(path: Path) -> bool:
    with open(path, "rb") as fh:
        return fh.read(4) == settings.CONTAINER_MAGIC


def _image_features(path: Path, raw_params: bool) -> FeatureVector:
    fv = rr_features.extract(load_image(path))
    return fv if raw_params else rr_features.receiver_view(fv)


def _features(path: Path, raw_params: bool) -> FeatureVector:
    if _is_container(path):
        return rr_features.dequantize(rr_features.load_features(path))
    return _image_features(path, raw_params)


def cmd_extract(args) -> int:
    qf = rr_features.quantize(rr_features.extract(load_image(args.ref)))
    path = rr_features.save_features(qf, args.out)
    print(" ".join(str(c) for c in qf.codes))
    print(path)
    return 0


def cmd_score(args) -> int:
    if args.ref_features:
        ref = rr_features.dequantize(rr_features.load_features(args.ref_features))
    else:
        ref = _image_features(args.ref, args.raw_params)
    dist = _features(args.dist, args.raw_params)
    result = rr_features.compare(ref, dist, args.measure, pooling=args.pooling)
    logger.info(f"{result.measure_id.value} uses {rr_features.feature_bits(result.measure_id)} bits of side information")
    print(f"{result.value:.6g}")
    return 0


def cmd_evaluate(args) -> int:
    records = evaluation.read_manifest(args.manifest)
    report = evaluation.evaluate_dataset(records, args.measure, raw_params=args.raw_params, pooling=args.pooling)
    frame = report_export.report_frame(report)
    if args.dump_scores:
        scores = report_export.scores_frame(report)
        Path(args.dump_scores).write_text(report_export.format_table(scores), encoding="utf-8")
        logger.info(f"Wrote {len(scores)} pair scores to {args.dump_scores}")
    if args.out:
        report_export.export_frame(frame, args.export_type, args.out, filename=args.filename)
    for failure in report.failures:
        logger.warning(f"{failure.subset_label}\t{failure.dist_path}\t{failure.error}")
    sys.stdout.write(report_export.format_table(frame))
    return 0


def cmd_distort(args) -> int:
    img = load_image(args.image)
    if args.blur is not None:
        out = gaussian_blur(img, args.blur)
    else:
        out = add_white_noise(img, args.noise, args.seed)
    print(save_image(out, args.out))
    return 0


def cmd_tilings(args) -> int:
    catalog = tetrolet.enumerate_tilings()
    if args.classes:
        for members in tetrolet.symmetry_classes(catalog):
            print(" ".join(str(i) for i in members))
    else:
        for line in tetrolet.format_catalog(catalog):
            print(line)
    return 0


def _subband(path: Path, level: int, detail: int) -> np.ndarray:
    img = crop_to_multiple(load_image(path), 2 ** (level + 1))
    return tetrolet.subband(tetrolet.forward(img, level), level, detail).reshape(-1)


def cmd_histogram(args) -> int:
    coeffs = _subband(args.image, args.level, args.detail)
    edges = np.histogram_bin_edges(coeffs, bins=args.bins)
    counts, _ = np.histogram(coeffs, bins=edges)
    frame = pd.DataFrame({"left": edges[:-1], "right": edges[1:], "count": counts})
    if args.against:
        other, _ = np.histogram(_subband(args.against, args.level, args.detail), bins=edges)
        frame["against"] = other
    if args.model:
        params = bkf.fit(coeffs)
        logger.info(f"Model for subband ({args.level}, {args.detail}): alpha={params.alpha:.4g} beta={params.beta:.4g}")
        frame["model"] = bkf.histogram_expectation(edges, params, coeffs.size)
    sys.stdout.write(report_export.format_table(frame))
    return 0


def cmd_selfcheck(args) -> int:
    results = selfcheck.run_selfcheck()
    for r in results:
        print(f"{r.name}\t{'ok' if r.passed else 'FAILED'}\t{r.detail}")
    return 0 if all(r.passed for r in results) else 1


def _positive_int(value: str) -> int:
    n = int(value)
    if n < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return n


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rriqa", description="Tetrolet-domain reduced-reference image quality")
    parser.add_argument("--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR"], help="Override LOG_LEVEL")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="Write the 24-byte feature container of a reference image")
    p.add_argument("ref", type=Path)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(handler=cmd_extract)

    p = sub.add_parser("score", help="Score a distorted image (or container) against reference features")
    ref = p.add_mutually_exclusive_group(required=True)
    ref.add_argument("--ref-features", type=Path, help="Reference feature container (.tqrr)")
    ref.add_argument("--ref", type=Path, help="Reference image")
    p.add_argument("dist", type=Path, help="Distorted image or feature container")
    p.add_argument("--measure", choices=[m.value for m in MeasureId], default=MeasureId.q5.value)
    p.add_argument("--raw-params", action="store_true", help="Skip quantisation of locally computed features")
    p.add_argument("--pooling", choices=[m.value for m in Q5Pooling], default=Q5Pooling.rss.value)
    p.set_defaults(handler=cmd_score)

    p = sub.add_parser("evaluate", help="Correlate a measure with DMOS over a dataset manifest")
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--measure", choices=[m.value for m in MeasureId], default=MeasureId.q5.value)
    p.add_argument("--raw-params", action="store_true")
    p.add_argument("--pooling", choices=[m.value for m in Q5Pooling], default=Q5Pooling.rss.value)
    p.add_argument("--dump-scores", type=Path, help="Write per-pair scores as a tab-separated table")
    p.add_argument("--export-type", choices=[t.value for t in ExportType], default=settings.DEFAULT_EXPORT_TYPE)
    p.add_argument("--out", type=Path, help="Directory for the exported report")
    p.add_argument("--filename", help="Report file name (default: timestamped)")
    p.set_defaults(handler=cmd_evaluate)

    p = sub.add_parser("distort", help="Apply Gaussian blur or white noise")
    p.add_argument("image", type=Path)
    kind = p.add_mutually_exclusive_group(required=True)
    kind.add_argument("--blur", type=float, metavar="SIGMA")
    kind.add_argument("--noise", type=float, metavar="SIGMA")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(handler=cmd_distort)

    p = sub.add_parser("tilings", help="Dump the tetromino tiling catalog")
    p.add_argument("--classes", action="store_true", help="One line per symmetry class instead")
    p.set_defaults(handler=cmd_tilings)

    p = sub.add_parser("histogram", help="Histogram of one subband")
    p.add_argument("image", type=Path)
    p.add_argument("--level", type=_positive_int, default=1)
    p.add_argument("--detail", type=int, choices=(1, 2, 3), default=1)
    p.add_argument("--bins", type=_positive_int, default=64)
    p.add_argument("--against", type=Path, help="Second image binned on the same edges")
    p.add_argument("--model", action="store_true", help="Add BKF-predicted counts")
    p.set_defaults(handler=cmd_histogram)

    p = sub.add_parser("selfcheck", help="Run the embedded invariant checks")
    p.set_defaults(handler=cmd_selfcheck)
    return parser


def run(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 0 if e.code is None else int(e.code)
    if args.log_level:
        Logger.set_level(args.log_level)
    try:
        return args.handler(args)
    except RRIQAError as e:
        print(f"{e.name}: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return 1
