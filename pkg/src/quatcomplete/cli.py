"""Command-line harness for color-image completion experiments.

Subcommands:
  complete   recover one image from a pixel mask, write artifacts + report
  synth      seeded exact-recovery experiment on a random low-rank matrix
  metrics    quality indexes between two images
  spectrum   quaternion singular values of an image, as CSV
  batch      sweep a directory of images over sampling ratios, as CSV

Exit codes: 0 success, 2 usage error, 3 input/data error, 4 configuration
error, 5 numerical failure.  With an explicit --seed every JSON/CSV output
is deterministic except the wall-clock fields (JSON `timing` object, CSV
`seconds` column).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from ._errors import ConfigError, DataError
from . import metrics as qm
from .completer import clamp_init_rank, complete_masked_image
from .imaging import (
    ObservationMask,
    encode_image,
    load_image,
    sample_mask,
    save_image,
)
from .quatmat import QuaternionMatrix, qsvd_values
from .solver import SolverConfig, solve

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INPUT = 3
EXIT_CONFIG = 4
EXIT_NUMERIC = 5


def _sig6(value):
    """Round floats to 6 significant digits for stable report serialization."""
    if isinstance(value, float):
        return float(f"{value:.6g}")
    return value


def _jsonify(obj):
    if isinstance(obj, dict):
        return {k: _jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonify(v) for v in obj]
    if isinstance(obj, (np.floating,)):
        return _sig6(float(obj))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    return _sig6(obj)


def _write_json(path, payload):
    with open(path, "w", encoding="ascii") as fh:
        json.dump(_jsonify(payload), fh, indent=2, sort_keys=False)
        fh.write("\n")


def _solver_echo(cfg: SolverConfig) -> dict:
    return {
        "lambda": cfg.lam,
        "init_rank": cfg.init_rank,
        "tol": cfg.tol,
        "relative_tol": cfg.relative_tol,
        "max_iters": cfg.max_iters,
        "mu_threshold": cfg.mu_threshold,
    }


def _add_solver_flags(p: argparse.ArgumentParser):
    p.add_argument("--lambda", dest="lam", type=float, default=0.5,
                   help="ridge weight on the factor norms (default 0.5)")
    p.add_argument("--init-rank", type=int, default=50,
                   help="starting rank of the lifted factors (default 50)")
    p.add_argument("--tol", type=float, default=1e-3,
                   help="stopping threshold on consecutive eps values (default 1e-3)")
    p.add_argument("--relative-tol", action="store_true",
                   help="interpret --tol relative to the observed data norm")
    p.add_argument("--max-iters", type=int, default=1000)
    p.add_argument("--mu-threshold", type=float, default=10.0,
                   help="eigenvalue-gap level that triggers a rank drop (default 10)")


def _config_from_args(args, m: int, n: int) -> SolverConfig:
    rank = clamp_init_rank(args.init_rank, m, n)
    if rank != args.init_rank:
        print(f"warning: init rank clamped from {args.init_rank} to {rank} "
              f"for a {m}x{n} problem", file=sys.stderr)
    if rank <= 0:
        raise ConfigError(f"init rank {args.init_rank} is not usable")
    return SolverConfig(
        lam=args.lam,
        init_rank=rank,
        tol=args.tol,
        max_iters=args.max_iters,
        mu_threshold=args.mu_threshold,
        seed=args.seed,
        relative_tol=args.relative_tol,
    )


# -- complete -------------------------------------------------------------

def _run_complete_task(image_path, args, mask=None, seed=None):
    """Shared by `complete` and `batch`: returns (result, report dict)."""
    original = load_image(image_path)
    m, n = original.shape[:2]
    seed = args.seed if seed is None else seed
    if mask is None:
        if args.mask_in:
            mask = ObservationMask.load(args.mask_in)
            if mask.shape != (m, n):
                raise DataError(
                    f"mask shape {mask.shape} does not match image {(m, n)}")
        else:
            mask = sample_mask(m, n, args.sr, seed)

    cfg_args = argparse.Namespace(**{**vars(args), "seed": seed})
    cfg = _config_from_args(cfg_args, m, n)

    tic = time.perf_counter()
    result = complete_masked_image(original, mask, cfg)
    wall = time.perf_counter() - tic

    report = {
        "input": str(image_path),
        "height": m,
        "width": n,
        "sampling_ratio": mask.sampling_ratio,
        "seed": mask.seed if isinstance(mask.seed, int) else seed,
        "solver": _solver_echo(cfg),
        "iterations": result.trace.iterations,
        "final_rank_complex": result.final_rank,
        "final_rank_quaternion": result.final_quaternion_rank,
        "eps_history_length": len(result.trace.eps_history),
        "rank_drops": result.trace.rank_drops,
        "metrics": {
            "rse": qm.rse(result.recovered, original),
            "psnr": qm.psnr(result.recovered, original),
            "ssim": qm.ssim(result.recovered, original),
            "fsim": qm.fsim(result.recovered, original),
        },
        "termination": result.trace.termination,
        "timing": {"wall_seconds": wall},
    }
    return result, report


def cmd_complete(args) -> int:
    if args.mask_in is None and args.sr is None:
        raise ConfigError("either --sr or --mask-in is required")
    if args.sr is not None and not (0.0 <= args.sr <= 1.0):
        raise ConfigError(f"sampling ratio must lie in [0, 1], got {args.sr}")
    result, report = _run_complete_task(args.input, args)

    out = Path(args.output)
    save_image(out, result.recovered)
    observed_path = out.with_suffix(".observed.png")
    save_image(observed_path, result.observed)
    mask_path = Path(args.mask_out) if args.mask_out else out.with_suffix(".mask.txt")
    result.mask.save(mask_path)
    if args.report:
        _write_json(args.report, report)
    print(f"recovered {args.input} -> {out} "
          f"(iters={report['iterations']}, rank={report['final_rank_quaternion']}, "
          f"psnr={report['metrics']['psnr']:.2f} dB)")
    return EXIT_OK


# -- synth ----------------------------------------------------------------

def synth_matrix(m: int, n: int, rank: int, seed: int) -> QuaternionMatrix:
    """Seeded random quaternion matrix of exact rank (product of two factors)."""
    rng = np.random.default_rng(seed)
    return QuaternionMatrix.random(m, rank, rng) @ QuaternionMatrix.random(rank, n, rng)


def cmd_synth(args) -> int:
    if args.rank > min(args.m, args.n):
        raise ConfigError(f"rank {args.rank} exceeds min(m, n) = {min(args.m, args.n)}")
    if not (0.0 <= args.sr <= 1.0):
        raise ConfigError(f"sampling ratio must lie in [0, 1], got {args.sr}")
    truth = synth_matrix(args.m, args.n, args.rank, args.seed)
    mask = sample_mask(args.m, args.n, args.sr, args.seed + 1)
    cfg = _config_from_args(args, args.m, args.n)

    tic = time.perf_counter()
    x, _, trace = solve(truth, mask, cfg)
    wall = time.perf_counter() - tic

    err = (x - truth).frobenius_norm()
    denom = truth.frobenius_norm()
    rse_db = -qm.DB_CAP if err == 0.0 else max(10.0 * np.log10(err / denom), -qm.DB_CAP)

    report = {
        "m": args.m,
        "n": args.n,
        "true_rank": args.rank,
        "sampling_ratio": args.sr,
        "seed": args.seed,
        "solver": _solver_echo(cfg),
        "iterations": trace.iterations,
        "final_rank_complex": trace.final_rank,
        "final_rank_quaternion": trace.final_rank // 2,
        "rank_drops": trace.rank_drops,
        "rse": float(rse_db),
        "termination": trace.termination,
        "timing": {"wall_seconds": wall},
    }
    if args.report:
        _write_json(args.report, report)
    print(json.dumps(_jsonify(report)))
    return EXIT_OK


# -- metrics ----------------------------------------------------------------

def cmd_metrics(args) -> int:
    a = load_image(args.input)
    b = load_image(args.reference)
    if a.shape != b.shape:
        raise DataError(f"image sizes differ: {a.shape} vs {b.shape}")
    payload = {
        "rse": qm.rse(a, b),
        "psnr": qm.psnr(a, b),
        "ssim": qm.ssim(a, b),
        "fsim": qm.fsim(a, b),
    }
    print(json.dumps(_jsonify(payload)))
    if args.report:
        _write_json(args.report, payload)
    return EXIT_OK


# -- spectrum ----------------------------------------------------------------

def cmd_spectrum(args) -> int:
    image = load_image(args.input)
    sigma = qsvd_values(encode_image(image))
    cut = 1e-10 * sigma[0] if sigma.size and sigma[0] > 0 else 0.0
    rows = [(i + 1, s) for i, s in enumerate(sigma) if s > cut]
    with open(args.csv, "w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "singular_value"])
        for idx, s in rows:
            writer.writerow([idx, f"{s:.6g}"])
    print(f"wrote {len(rows)} singular values to {args.csv}")
    return EXIT_OK


# -- batch ----------------------------------------------------------------

def _derive_seed(master: int, name: str, sr: float) -> int:
    digest = hashlib.sha256(f"{master}:{name}:{sr!r}".encode()).digest()
    return int.from_bytes(digest[:8], "big") % (2 ** 63)


def cmd_batch(args) -> int:
    directory = Path(args.dir)
    if not directory.is_dir():
        raise DataError(f"not a directory: {directory}")
    images = sorted(p for p in directory.iterdir()
                    if p.suffix.lower() in {".png", ".bmp", ".tif", ".tiff", ".jpg", ".jpeg"})
    if not images:
        raise DataError(f"no images found in {directory}")
    sr_values = [float(s) for s in args.sr_list.split(",")]
    for sr in sr_values:
        if not (0.0 <= sr <= 1.0):
            raise ConfigError(f"sampling ratio must lie in [0, 1], got {sr}")

    tasks = [(img, sr) for img in images for sr in sr_values]

    def run(task):
        img, sr = task
        seed = _derive_seed(args.seed, img.name, sr)
        local = argparse.Namespace(**vars(args))
        local.sr = sr
        local.mask_in = None
        _, report = _run_complete_task(img, local, seed=seed)
        return (img.name, sr, seed, report)

    workers = max(1, args.workers)
    # hold the BLAS thread limit across the whole pool: the per-solve limit
    # context mutates process-global state, so concurrent enter/exit must all
    # agree on the value to stay deterministic
    with threadpool_limits(limits=1):
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(run, tasks))
    rows.sort(key=lambda r: (r[0], r[1]))

    with open(args.csv, "w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh)
        writer.writerow(["image", "sr", "seed", "iterations", "rank",
                         "rse", "psnr", "ssim", "fsim", "seconds"])
        for name, sr, seed, report in rows:
            met = report["metrics"]
            writer.writerow([
                name, f"{sr:g}", seed,
                report["iterations"], report["final_rank_quaternion"],
                f"{met['rse']:.6g}", f"{met['psnr']:.6g}",
                f"{met['ssim']:.6g}", f"{met['fsim']:.6g}",
                f"{report['timing']['wall_seconds']:.6g}",
            ])
    print(f"wrote {len(rows)} rows to {args.csv}")
    return EXIT_OK


# -- parser ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="quatcomplete",
        description="Low-rank quaternion completion of color images.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("complete", help="recover one image from a pixel mask")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True, help="recovered image path (PNG)")
    p.add_argument("--report", help="JSON report path")
    p.add_argument("--sr", type=float, help="sampling ratio in [0, 1]")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mask-in", help="load the observation mask from this file")
    p.add_argument("--mask-out", help="write the observation mask to this file")
    _add_solver_flags(p)
    p.set_defaults(func=cmd_complete)

    p = sub.add_parser("synth", help="seeded exact-recovery experiment")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--rank", type=int, required=True, help="quaternion rank of the truth")
    p.add_argument("--sr", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--report", help="JSON report path")
    _add_solver_flags(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("metrics", help="quality indexes between two images")
    p.add_argument("--input", required=True)
    p.add_argument("--reference", required=True)
    p.add_argument("--report", help="JSON report path")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("spectrum", help="quaternion singular values of an image")
    p.add_argument("--input", required=True)
    p.add_argument("--csv", required=True)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("batch", help="sweep a directory of images over sampling ratios")
    p.add_argument("--dir", required=True)
    p.add_argument("--sr-list", required=True, help="comma-separated ratios, e.g. 0.1,0.3,0.5")
    p.add_argument("--csv", required=True)
    p.add_argument("--seed", type=int, default=0, help="master seed for per-task seeds")
    p.add_argument("--workers", type=int, default=4)
    _add_solver_flags(p)
    p.set_defaults(func=cmd_batch)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("always")
            # one-line diagnostics on standard error, independent of the host's
            # warning filters (pytest captures the default machinery)
            warnings.showwarning = lambda msg, *a, **k: print(
                f"warning: {msg}", file=sys.stderr)
            return args.func(args)
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
