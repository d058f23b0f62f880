"""Command-line surface and file I/O.

Verbs: ``seed`` (matcher only), ``run`` (full pipeline plus diagnostics),
``eval`` (error metrics against ground truth), ``sweep-confidence``
(error/density curve over confidence thresholds), ``bench`` (hierarchical
versus naive sweep costs).  Configuration is a flat key=value text file with
``--set key=value`` overrides; unknown keys are rejected.  Exit codes:
0 success, 1 usage or configuration error, 2 data error.

Disparity images are 16-bit PNG with value = round(disparity * 256) and 0
reserved for invalid; confidence images store the raw consensus degree.
"""

import argparse
import csv
import logging
import sys
import time
from dataclasses import dataclass, fields
from pathlib import Path

import imageio.v3 as iio
import numpy as np

from . import oracle, solver
from .local_model import make_planar_disparity
from .region_pyramid import build_pyramid
from .sgm_seed import SgmParams, classify_weights, compute_seed, load_seed, save_seed
from .stereo_app import StereoParams, run_stereo

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2

_LUMA = (0.299, 0.587, 0.114)


class UsageError(Exception):
    """Bad invocation or configuration; maps to exit code 1."""


class DataError(Exception):
    """Unusable input data; maps to exit code 2."""


@dataclass
class RunConfig:
    """Every tunable of the pipeline, flat, with its shipped default.

    Path fields may come from the config file or the command line (the
    command line wins).  ``strict_deterministic`` is accepted for
    completeness: all reductions in this implementation run in a fixed order,
    so the flag cannot change behavior.
    """

    left: str = ""
    right: str = ""
    seed: str = ""
    ground_truth: str = ""
    noc_mask: str = ""
    output_dir: str = "out"
    # stereo schedule and costs
    base_outlier_cost: float = 1.44
    consistency_weight: float = 0.4
    start_weight_scale: float = 2.0 ** -18
    weight_growth: float = 8.0
    growth_interval: int = 6
    occlusion_iteration: int = 50
    post_occlusion_iterations: int = 30
    occlusion_correction: bool = True
    num_scales: int = 5
    finest_side: int = 4
    jump_threshold: float = 1.0
    # matcher
    max_disparity: int = 256
    census_window: int = 5
    cost_alpha: float = 0.7
    grad_cap: float = 8.0
    p1: float = 7.0
    p2: float = 100.0
    lr_tolerance: int = 1
    # modes and diagnostics
    strict_deterministic: bool = True
    audit_every_iteration: bool = True
    emit_inlier_masks: bool = True
    emit_cost_trace: bool = True
    snapshot_iterations: str = ""
    support_pixels: str = ""

    def stereo_params(self):
        return StereoParams(
            base_outlier_cost=self.base_outlier_cost,
            consistency_weight=self.consistency_weight,
            start_weight_scale=self.start_weight_scale,
            weight_growth=self.weight_growth,
            growth_interval=self.growth_interval,
            occlusion_iteration=self.occlusion_iteration,
            post_occlusion_iterations=self.post_occlusion_iterations,
            occlusion_correction=self.occlusion_correction,
            num_scales=self.num_scales,
            finest_side=self.finest_side,
            jump_threshold=self.jump_threshold,
            audit_every=1 if self.audit_every_iteration else 10,
        )

    def sgm_params(self):
        return SgmParams(
            max_disparity=self.max_disparity,
            census_window=self.census_window,
            cost_alpha=self.cost_alpha,
            grad_cap=self.grad_cap,
            p1=self.p1,
            p2=self.p2,
            lr_tolerance=self.lr_tolerance,
        )


def _parse_bool(text):
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"not a boolean: {text!r}")


def parse_config_text(text):
    """key = value lines into a string dict; # starts a comment."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"config line {lineno}: expected key = value, got {raw!r}")
        key, value = line.split("=", 1)
        values[key.strip()] = value.strip()
    return values


def build_config(config_path=None, overrides=()):
    """RunConfig from defaults, then the config file, then --set overrides."""
    raw = {}
    if config_path:
        try:
            raw.update(parse_config_text(Path(config_path).read_text()))
        except OSError as exc:
            raise UsageError(f"cannot read config file: {exc}") from exc
    for item in overrides:
        if "=" not in item:
            raise UsageError(f"override must look like key=value, got {item!r}")
        key, value = item.split("=", 1)
        raw[key.strip()] = value.strip()
    known = {f.name: f for f in fields(RunConfig)}
    cfg = RunConfig()
    for key, text in raw.items():
        if key not in known:
            raise UsageError(f"unknown configuration key: {key}")
        default = getattr(cfg, key)
        try:
            if isinstance(default, bool):
                value = _parse_bool(text)
            elif isinstance(default, int):
                value = int(text)
            elif isinstance(default, float):
                value = float(text)
            else:
                value = text
        except ValueError as exc:
            raise UsageError(f"bad value for {key}: {text!r}") from exc
        setattr(cfg, key, value)
    return cfg


def load_image(path):
    """Grayscale float64 image; color inputs collapse by Rec.601 luma.

    8- and 16-bit integer inputs keep their raw value range.
    """
    try:
        img = np.asarray(iio.imread(path))
    except (OSError, ValueError) as exc:
        raise DataError(f"cannot read image {path}: {exc}") from exc
    if img.size == 0:
        raise DataError(f"{path}: zero-size image")
    if img.ndim == 3:
        if img.shape[2] < 3:
            img = img[..., 0]
        else:
            rgb = img[..., :3].astype(np.float64)
            img = _LUMA[0] * rgb[..., 0] + _LUMA[1] * rgb[..., 1] + _LUMA[2] * rgb[..., 2]
    if img.ndim != 2:
        raise DataError(f"{path}: expected a 2-D image, got shape {img.shape}")
    return np.asarray(img, dtype=np.float64)


def write_disparity(disparity, path, valid=None):
    """16-bit disparity PNG; values clamp into [0, 65535] with a warning."""
    q = np.round(np.asarray(disparity, dtype=np.float64) * 256.0)
    clipped = int(np.sum((q < 0) | (q > 65535)))
    if clipped:
        logger.warning("%s: %d disparity values clamped to the 16-bit range", path, clipped)
    out = np.clip(q, 0, 65535).astype(np.uint16)
    if valid is not None:
        out = np.where(valid, out, 0).astype(np.uint16)
    iio.imwrite(path, out)


def read_disparity(path):
    """(disparity, valid) from a 16-bit PNG in the value = d * 256 convention."""
    try:
        raw = np.asarray(iio.imread(path))
    except (OSError, ValueError) as exc:
        raise DataError(f"cannot read disparity {path}: {exc}") from exc
    if raw.ndim != 2 or not np.issubdtype(raw.dtype, np.integer):
        raise DataError(f"{path}: expected a single-channel integer disparity image")
    return raw.astype(np.float64) / 256.0, raw > 0


def write_confidence(count, path):
    """16-bit PNG of raw consensus-degree counts."""
    c = np.asarray(count)
    if c.max(initial=0) > 65535:
        logger.warning("%s: confidence values clamped to the 16-bit range", path)
    iio.imwrite(path, np.clip(c, 0, 65535).astype(np.uint16))


def read_mask(path, shape):
    """Boolean mask image (nonzero = set), checked against ``shape``."""
    try:
        raw = np.asarray(iio.imread(path))
    except (OSError, ValueError) as exc:
        raise DataError(f"cannot read mask {path}: {exc}") from exc
    if raw.ndim == 3:
        raw = raw[..., 0]
    if raw.shape != shape:
        raise DataError(f"{path}: mask shape {raw.shape} does not match {shape}")
    return raw > 0


@dataclass
class EvalBlock:
    label: str
    pixels: int
    avg_error: float
    rates: dict  # strict ">k px" error percentage per threshold


@dataclass
class EvalReport:
    all: EvalBlock
    noc: EvalBlock | None
    filtered_all: EvalBlock | None
    filtered_noc: EvalBlock | None
    min_confidence: float | None
    density: float | None  # percentage of GT pixels surviving the filter


def _eval_block(label, error, mask, thresholds):
    n = int(mask.sum())
    if n == 0:
        return EvalBlock(label=label, pixels=0, avg_error=float("nan"),
                         rates={t: float("nan") for t in thresholds})
    err = error[mask]
    rates = {t: 100.0 * float(np.mean(err > t)) for t in thresholds}
    return EvalBlock(label=label, pixels=n, avg_error=float(err.mean()), rates=rates)


def evaluate(disparity, ground_truth, noc_mask=None, confidence=None,
             min_confidence=None, thresholds=(2.0, 3.0, 4.0, 5.0)):
    """Error metrics over ground-truth pixels (gt > 0 marks coverage).

    Rates use strict inequality: a pixel counts against threshold k only when
    its error exceeds k exactly.  A NOC mask restricts a second block; a
    confidence threshold adds filtered blocks plus the retained density.
    """
    disparity = np.asarray(disparity, dtype=np.float64)
    ground_truth = np.asarray(ground_truth, dtype=np.float64)
    if disparity.shape != ground_truth.shape:
        raise DataError("disparity and ground truth dimensions differ")
    gt_mask = ground_truth > 0
    if not gt_mask.any():
        raise DataError("ground truth has no valid pixels")
    error = np.abs(disparity - ground_truth)
    all_block = _eval_block("All", error, gt_mask, thresholds)
    noc_block = None
    if noc_mask is not None:
        noc_block = _eval_block("NOC", error, gt_mask & noc_mask, thresholds)
    filtered_all = filtered_noc = density = None
    if confidence is not None and min_confidence is not None:
        keep = gt_mask & (np.asarray(confidence) >= min_confidence)
        filtered_all = _eval_block("All filtered", error, keep, thresholds)
        density = 100.0 * filtered_all.pixels / all_block.pixels
        if noc_mask is not None:
            filtered_noc = _eval_block("NOC filtered", error, keep & noc_mask, thresholds)
    return EvalReport(all=all_block, noc=noc_block, filtered_all=filtered_all,
                      filtered_noc=filtered_noc, min_confidence=min_confidence,
                      density=density)


def format_report(report):
    lines = []

    def fmt(block, extra=""):
        rates = "  ".join(f">{t:g}px {r:6.2f}%" for t, r in sorted(block.rates.items()))
        lines.append(
            f"{block.label:<14} pixels {block.pixels:>9}  avg {block.avg_error:7.3f} px  "
            f"{rates}{extra}"
        )

    fmt(report.all)
    if report.noc is not None:
        fmt(report.noc)
    if report.filtered_all is not None:
        extra = f"  (confidence >= {report.min_confidence:g}, density {report.density:.1f}%)"
        fmt(report.filtered_all, extra)
    if report.filtered_noc is not None:
        fmt(report.filtered_noc)
    return "\n".join(lines)


@dataclass
class SweepRow:
    threshold: float
    pixels: int
    density: float
    error_rate: float
    avg_error: float


def sweep_confidence(disparity, ground_truth, confidence, steps=20, error_threshold=3.0):
    """Density and error rate for an increasing ladder of confidence cuts.

    Thresholds run from 0 to the largest confidence seen on ground-truth
    pixels; cuts retaining no pixels are dropped, so density stays positive
    and non-increasing across the returned rows.
    """
    disparity = np.asarray(disparity, dtype=np.float64)
    ground_truth = np.asarray(ground_truth, dtype=np.float64)
    confidence = np.asarray(confidence, dtype=np.float64)
    gt_mask = ground_truth > 0
    if not gt_mask.any():
        raise DataError("ground truth has no valid pixels")
    error = np.abs(disparity - ground_truth)
    total = int(gt_mask.sum())
    top = float(confidence[gt_mask].max())
    rows = []
    for threshold in np.unique(np.round(np.linspace(0.0, top, steps))):
        keep = gt_mask & (confidence >= threshold)
        n = int(keep.sum())
        if n == 0:
            break
        rows.append(
            SweepRow(
                threshold=float(threshold),
                pixels=n,
                density=100.0 * n / total,
                error_rate=100.0 * float(np.mean(error[keep] > error_threshold)),
                avg_error=float(error[keep].mean()),
            )
        )
    return rows


def write_sweep_csv(rows, path):
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["threshold", "pixels", "density_percent", "error_rate_percent",
                         "avg_error_px"])
        for row in rows:
            writer.writerow([row.threshold, row.pixels, f"{row.density:.4f}",
                             f"{row.error_rate:.4f}", f"{row.avg_error:.6f}"])


def write_trace_csv(trace, path):
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        num_scales = len(trace[0].outliers) if trace else 0
        header = ["iteration", "weight", "cost"]
        header += [f"outliers_scale{k}" for k in range(num_scales)]
        header.append("degenerate_events")
        writer.writerow(header)
        for row in trace:
            writer.writerow([row.iteration, repr(row.weight), repr(row.cost),
                             *row.outliers, row.degenerate_events])


def tiled_inlier_mask(pyramid, k, inlier):
    """(H, W) bool: each pixel shows its non-overlapping tile region's status.

    Tiles are anchored at multiples of the patch side; the last tile in each
    direction is clipped against the image edge by reusing the final anchor,
    so every pixel belongs to exactly one displayed region.
    """
    side = pyramid.side(k)
    ny, nx = pyramid.grid_shape(k)
    xs = np.minimum((np.arange(pyramid.width) // side) * side, nx - 1)
    ys = np.minimum((np.arange(pyramid.height) // side) * side, ny - 1)
    return inlier[np.ix_(ys, xs)]


def support_region_mask(pyramid, state, x, y):
    """Union of the pixel extents of inlying regions covering (x, y)."""
    mask = np.zeros((pyramid.height, pyramid.width), dtype=bool)
    for rid in pyramid.covering_regions(x, y):
        if state.scales[rid.scale].inlier[rid.y, rid.x]:
            rows, cols = pyramid.region_slice(rid)
            mask[rows, cols] = True
    return mask


def _boundary(mask):
    interior = mask.copy()
    interior[1:] &= mask[:-1]
    interior[:-1] &= mask[1:]
    interior[:, 1:] &= mask[:, :-1]
    interior[:, :-1] &= mask[:, 1:]
    return mask & ~interior


def emit_diagnostics(result, out_dir, left=None, support_pixels=(), snapshots=None,
                     emit_masks=True, emit_trace=True):
    """Best-effort artifact dump; failures are logged, never fatal."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        if emit_trace and result.trace:
            write_trace_csv(result.trace, out / "trace.csv")
        write_confidence(result.confidence, out / "confidence.png")
        if emit_masks:
            for k in range(result.pyramid.num_scales):
                mask = tiled_inlier_mask(result.pyramid, k, result.state.scales[k].inlier)
                iio.imwrite(out / f"inliers_scale{k}.png",
                            (mask * np.uint8(255)).astype(np.uint8))
        if left is not None:
            base = np.asarray(left, dtype=np.float64)
            span = base.max() - base.min()
            base = (base - base.min()) / (span if span > 0 else 1.0)
            backdrop = (base * 128).astype(np.uint8)
            for x, y in support_pixels:
                mask = support_region_mask(result.pyramid, result.state, x, y)
                overlay = backdrop.copy()
                overlay[_boundary(mask)] = 255
                overlay[y, x] = 255
                iio.imwrite(out / f"support_{x:04d}_{y:04d}.png", overlay)
        for iteration, field in (snapshots or {}).items():
            write_disparity(field, out / f"disparity_iter{iteration:03d}.png")
    except Exception:
        logger.exception("diagnostic emission failed; continuing")


def _parse_pixel_list(text):
    pixels = []
    for chunk in text.replace(";", " ").split():
        parts = chunk.split(",")
        if len(parts) != 2:
            raise UsageError(f"support pixel must look like x,y: {chunk!r}")
        pixels.append((int(parts[0]), int(parts[1])))
    return pixels


def _parse_int_list(text):
    return [int(tok) for tok in text.replace(",", " ").split()]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _add_common(sub):
    sub.add_argument("--config", help="key=value configuration file")
    sub.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                     help="override one configuration key")


def _build_parser():
    parser = _Parser(prog="mscon", description=__doc__.splitlines()[0])
    subs = parser.add_subparsers(dest="verb", required=True)

    p = subs.add_parser("seed", help="compute and save the matcher seed")
    _add_common(p)
    p.add_argument("--left")
    p.add_argument("--right")
    p.add_argument("--out", default="seed.png")
    p.set_defaults(func=cmd_seed)

    p = subs.add_parser("run", help="full stereo pipeline")
    _add_common(p)
    p.add_argument("--left")
    p.add_argument("--right")
    p.add_argument("--seed", help="precomputed seed image (skips matching)")
    p.add_argument("--gt", help="ground-truth disparity for an inline report")
    p.add_argument("--noc", help="NOC mask image")
    p.add_argument("--out-dir")
    p.set_defaults(func=cmd_run)

    p = subs.add_parser("eval", help="compare a disparity map against ground truth")
    p.add_argument("--disparity", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--noc")
    p.add_argument("--confidence")
    p.add_argument("--min-confidence", type=float)
    p.add_argument("--thresholds", default="2,3,4,5")
    p.set_defaults(func=cmd_eval)

    p = subs.add_parser("sweep-confidence", help="density/error curve over confidence cuts")
    p.add_argument("--disparity", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--confidence", required=True)
    p.add_argument("--out", default="sweep.csv")
    p.add_argument("--steps", type=int, default=20)
    p.add_argument("--error-threshold", type=float, default=3.0)
    p.set_defaults(func=cmd_sweep)

    p = subs.add_parser("bench", help="hierarchical vs naive sweep cost")
    p.add_argument("--image-size", type=int, default=256)
    p.add_argument("--num-scales", type=int, default=5)
    p.add_argument("--points", type=int, default=256)
    p.add_argument("--depths", default="4,6,8")
    p.add_argument("--repeat", type=int, default=3)
    p.set_defaults(func=cmd_bench)

    return parser


def _require(cfg_value, cli_value, name):
    value = cli_value or cfg_value
    if not value:
        raise UsageError(f"missing required input: {name}")
    return value


def cmd_seed(args):
    cfg = build_config(args.config, args.set)
    left = load_image(_require(cfg.left, args.left, "left image"))
    right = load_image(_require(cfg.right, args.right, "right image"))
    try:
        seed = compute_seed(left, right, cfg.sgm_params())
        seed = classify_weights(seed, cfg.jump_threshold)
        save_seed(seed, args.out)
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    print(f"seed written to {args.out} (density {100.0 * seed.density:.1f}%)")
    return EXIT_OK


def cmd_run(args):
    cfg = build_config(args.config, args.set)
    left = load_image(_require(cfg.left, args.left, "left image"))
    seed = None
    right = None
    seed_path = args.seed or cfg.seed
    if seed_path:
        try:
            seed = load_seed(seed_path, cfg.jump_threshold)
        except (OSError, ValueError) as exc:
            raise DataError(f"cannot load seed {seed_path}: {exc}") from exc
        if seed.z.shape != left.shape:
            raise DataError("seed dimensions do not match the left image")
    else:
        right = load_image(_require(cfg.right, args.right, "right image"))
        if right.shape != left.shape:
            raise DataError("left and right dimensions differ")
    out_dir = Path(args.out_dir or cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    wanted = set(_parse_int_list(cfg.snapshot_iterations))
    collected = {}

    def observer(iteration, scene, state, weight):
        if iteration in wanted:
            collected[iteration] = scene.scalar().copy()

    start = time.perf_counter()
    try:
        result = run_stereo(left, right, params=cfg.stereo_params(),
                            sgm_params=cfg.sgm_params(), seed=seed,
                            observer=observer if wanted else None)
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    elapsed = time.perf_counter() - start
    write_disparity(result.disparity, out_dir / "disparity.png",
                    valid=result.confidence > 0)
    emit_diagnostics(result, out_dir, left=left,
                     support_pixels=_parse_pixel_list(cfg.support_pixels),
                     snapshots=collected, emit_masks=cfg.emit_inlier_masks,
                     emit_trace=cfg.emit_cost_trace)
    print(f"pipeline finished in {elapsed:.1f} s; outputs in {out_dir}")
    gt_path = args.gt or cfg.ground_truth
    if gt_path:
        gt, _ = read_disparity(gt_path)
        noc = None
        noc_path = args.noc or cfg.noc_mask
        if noc_path:
            noc = read_mask(noc_path, gt.shape)
        report = evaluate(result.disparity, gt, noc_mask=noc,
                          confidence=result.confidence, min_confidence=200.0)
        text = format_report(report)
        print(text)
        (out_dir / "eval.txt").write_text(text + "\n")
    return EXIT_OK


def cmd_eval(args):
    disparity, _ = read_disparity(args.disparity)
    gt, _ = read_disparity(args.gt)
    if disparity.shape != gt.shape:
        raise DataError("disparity and ground truth dimensions differ")
    noc = read_mask(args.noc, gt.shape) if args.noc else None
    confidence = None
    if args.confidence:
        try:
            confidence = np.asarray(iio.imread(args.confidence), dtype=np.float64)
        except (OSError, ValueError) as exc:
            raise DataError(f"cannot read confidence {args.confidence}: {exc}") from exc
    try:
        thresholds = tuple(float(tok) for tok in args.thresholds.split(","))
    except ValueError as exc:
        raise UsageError(f"bad thresholds: {args.thresholds!r}") from exc
    report = evaluate(disparity, gt, noc_mask=noc, confidence=confidence,
                      min_confidence=args.min_confidence, thresholds=thresholds)
    print(format_report(report))
    return EXIT_OK


def cmd_sweep(args):
    disparity, _ = read_disparity(args.disparity)
    gt, _ = read_disparity(args.gt)
    try:
        confidence = np.asarray(iio.imread(args.confidence), dtype=np.float64)
    except (OSError, ValueError) as exc:
        raise DataError(f"cannot read confidence {args.confidence}: {exc}") from exc
    rows = sweep_confidence(disparity, gt, confidence, steps=args.steps,
                            error_threshold=args.error_threshold)
    write_sweep_csv(rows, args.out)
    for row in rows:
        print(f"threshold {row.threshold:8.0f}  density {row.density:6.2f}%  "
              f">{args.error_threshold:g}px {row.error_rate:6.2f}%")
    return EXIT_OK


def _time_best(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def cmd_bench(args):
    print("addition counts, 1-D dyadic pyramid "
          f"({args.points} points):")
    print(f"{'scales':>8} {'naive':>12} {'hierarchical':>14} {'ratio':>8}")
    for k in _parse_int_list(args.depths):
        naive = oracle.count_operations("naive", args.points, k)
        hier = oracle.count_operations("hierarchical", args.points, k)
        print(f"{k:>8} {naive:>12} {hier:>14} {naive / hier:>8.2f}")
    size, k = args.image_size, args.num_scales
    pyramid = build_pyramid(size, size, k)
    model = make_planar_disparity(coord_scale=float(size))
    u = model.grid(size, size)
    rng = np.random.default_rng(0)
    z = rng.normal(size=(size, size, 1))
    coefs = [rng.normal(size=pyramid.grid_shape(j) + (model.M,)) for j in range(k)]
    inliers = [rng.random(pyramid.grid_shape(j)) < 0.8 for j in range(k)]

    def hierarchical():
        solver.consistency_terms(pyramid, u, z)
        acc, counts = solver.accumulate_down(pyramid, coefs, inliers)
        solver.consensus_from_sums(pyramid, u, acc[0], counts[0])

    def naive():
        oracle.dense_consistency_terms(pyramid.sides, u, z)
        oracle.dense_consensus(pyramid.sides, u, coefs, inliers)

    t_h = _time_best(hierarchical, args.repeat)
    t_n = _time_best(naive, args.repeat)
    print(f"\nwall clock at {size}x{size}, {k} scales (best of {args.repeat}):")
    print(f"{'hierarchical':>14} {t_h * 1e3:10.1f} ms")
    print(f"{'naive':>14} {t_n * 1e3:10.1f} ms")
    print(f"{'speedup':>14} {t_n / t_h:10.1f} x")
    return EXIT_OK


def main(argv=None):
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    try:
        args = _build_parser().parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
