"""Command-line entry point: ``panogabor <command> ...``.

Structured results go to stdout as JSON (or to CSV files for traces and
per-row tables); figures are written alongside. Usage errors exit 2,
computation errors exit 1 with a JSON object on stderr.
"""

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import plotting
from .conv import AGGREGATES, latitude_filter, pano_gabor_conv
from .errors import PanoGaborError
from .formats import (
    colorize,
    load_depth,
    load_image,
    load_tensor,
    save_image,
    save_tensor,
    write_pfm,
    write_png,
)
from .fusion import FusionConfig, cs_ufm_forward, init_weights, load_weights, save_weights
from .gabor import DISTORTION_MODES, export_bank_image, latitude_bank_stack, stack_kernels
from .geometry import CubemapFaces, cubemap_to_erp, erp_to_cubemap, latitudes
from .gradcheck import run_default_gradcheck
from .losses import LossConfig, fit_depth, loss_breakdown, spherical_gradient
from .metrics import depth_metrics

log = logging.getLogger("panogabor")


def _emit(obj):
    sys.stdout.write(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _outdir(path):
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_bank(args):
    out = _outdir(args.out)
    banks = latitude_bank_stack(args.height, args.epsilon, args.mode)
    write_png(out / "bank_gallery.png", export_bank_image(banks))
    save_tensor(out / "bank_kernels.pgt", stack_kernels(banks))
    lat = latitudes(args.height)
    with open(out / "bank_params.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["row", "latitude", "coefficient", "frequency", "sigma", "psi"])
        for r, b in enumerate(banks):
            p = b.params
            w.writerow([r, repr(float(lat[r])), repr(p.coefficient), repr(p.frequency), repr(p.sigma), repr(p.psi)])
    if args.figures:
        plotting.distortion_profile_figure(args.height, out / "distortion_profile.png", args.mode)
        plotting.bank_figure(banks[args.height // 2], out / "bank_equator.png")
    _emit(
        {
            "height": args.height,
            "epsilon": args.epsilon,
            "mode": args.mode,
            "coefficient": [b.params.coefficient for b in banks],
            "frequency": [b.params.frequency for b in banks],
            "sigma": [b.params.sigma for b in banks],
            "outputs": sorted(p.name for p in out.iterdir()),
        }
    )


def _preview_strip(faces):
    data = faces.faces
    strip = np.concatenate(list(data[:, 0]), axis=1)
    lo, hi = strip.min(), strip.max()
    norm = np.zeros_like(strip) if hi <= lo else (strip - lo) / (hi - lo)
    return np.round(norm * 255).astype(np.uint8)


def cmd_project(args):
    yaw = math.radians(args.yaw)
    if args.to == "cube":
        img = load_image(args.input)
        faces = erp_to_cubemap(img, args.face_size, yaw)
        save_tensor(args.output, faces.faces)
        if args.preview:
            write_png(args.preview, _preview_strip(faces))
        _emit({"faces": list(faces.faces.shape), "yaw_degrees": args.yaw, "output": str(args.output)})
    else:
        data = load_tensor(args.input)
        if data.ndim == 3:
            data = data[:, None]
        s = data.shape[-1]
        height = args.height or 2 * s
        erp = cubemap_to_erp(CubemapFaces(s, yaw, data), height, 2 * height)
        save_image(args.output, erp)
        _emit({"erp": list(erp.shape), "yaw_degrees": args.yaw, "output": str(args.output)})


def cmd_convolve(args):
    x = load_image(args.input)
    c, h, _ = x.shape
    banks = latitude_bank_stack(h, args.epsilon, args.mode)
    if c == h:
        y, kind = pano_gabor_conv(x, banks, args.aggregate), "channel"
    else:
        y, kind = latitude_filter(x, banks, args.aggregate), "row"
    if Path(args.output).suffix.lower() == ".png":
        lo, hi = y.min(), y.max()
        y = np.zeros_like(y) if hi <= lo else (y - lo) / (hi - lo)
    save_image(args.output, y)
    _emit({"shape": list(y.shape), "banks_indexed_by": kind, "output": str(args.output)})


def cmd_gradient(args):
    out = _outdir(args.out)
    d = load_depth(args.input)
    gx = spherical_gradient(d, "x")
    gy = spherical_gradient(d, "y")
    write_pfm(out / "gx.pfm", gx)
    write_pfm(out / "gy.pfm", gy)
    for name, g in (("gx", gx), ("gy", gy)):
        lim = float(np.abs(g).max())
        write_png(out / f"{name}.png", colorize(g, -lim, lim))
    if args.figures:
        plotting.gradient_figure(d, gx, gy, out / "gradient.png")
    _emit(
        {
            "shape": list(d.shape),
            "gx_abs_mean": float(np.abs(gx).mean()),
            "gy_abs_mean": float(np.abs(gy).mean()),
            "outputs": sorted(p.name for p in out.iterdir()),
        }
    )


def cmd_fuse(args):
    a = load_tensor(args.a)
    b = load_tensor(args.b)
    cfg = FusionConfig(args.aggregate, args.epsilon, args.mode, args.c_out)
    if args.weights:
        w = load_weights(args.weights)
    else:
        w = init_weights(a.shape[0], a.shape[1], args.seed, args.scheme, cfg)
    if args.save_weights:
        save_weights(w, args.save_weights)
    y = cs_ufm_forward(a, b, w, cfg)
    save_tensor(args.output, y)
    _emit({"shape": list(y.shape), "output": str(args.output)})


def _loss_cfg(args):
    return LossConfig(theta=args.theta, delta=args.theta, eta=args.eta)


def cmd_loss(args):
    cfg = _loss_cfg(args)
    result = loss_breakdown(load_depth(args.pred), load_depth(args.gt), cfg)
    result.update(theta=cfg.theta, delta=cfg.delta, eta=cfg.eta)
    _emit(result)


def cmd_eval(args):
    mask = None
    if args.mask:
        mask = load_image(args.mask)[0] > 0
    report = depth_metrics(load_depth(args.pred), load_depth(args.gt), mask, args.median_scaling)
    _emit(report.to_dict())


def cmd_fit(args):
    gt = load_depth(args.gt)
    init = np.full_like(gt, gt.mean()) if args.init == "mean" else load_depth(args.init)
    pred, trace = fit_depth(init, gt, args.steps, args.lr, _loss_cfg(args))
    write_pfm(args.output, pred)
    trace_path = Path(args.trace or Path(args.output).with_suffix(".csv"))
    with open(trace_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["step", "loss"])
        for k, v in enumerate(trace):
            w.writerow([k, repr(float(v))])
    if args.figures:
        plotting.loss_trace_figure(trace, trace_path.with_suffix(".png"))
    _emit(
        {
            "initial_loss": float(trace[0]),
            "final_loss": float(trace[-1]),
            "ratio": float(trace[-1] / trace[0]) if trace[0] else 0.0,
            "steps": args.steps,
            "lr": args.lr,
            "output": str(args.output),
            "trace": str(trace_path),
        }
    )


def cmd_gradcheck(args):
    result = run_default_gradcheck(args.seed)
    _emit(result.to_dict())
    return 0 if result.passed else 1


def build_parser():
    p = argparse.ArgumentParser(prog="panogabor", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def figures_flag(sp):
        sp.add_argument("--no-figures", dest="figures", action="store_false", help="skip matplotlib figures")

    def gabor_flags(sp):
        sp.add_argument("--epsilon", type=float, default=0.0)
        sp.add_argument("--mode", choices=DISTORTION_MODES, default="linear")

    def loss_flags(sp):
        sp.add_argument("--theta", type=float, default=0.2, help="berHu threshold (also delta)")
        sp.add_argument("--eta", type=float, default=0.5, help="weight of the spherical gradient loss")

    sp = sub.add_parser("bank", help="filter-bank gallery, raw kernels and per-row parameters")
    sp.add_argument("--height", type=int, default=512)
    gabor_flags(sp)
    sp.add_argument("--out", default="bank_out")
    figures_flag(sp)
    sp.set_defaults(func=cmd_bank)

    sp = sub.add_parser("project", help="ERP <-> cubemap reprojection")
    sp.add_argument("input")
    sp.add_argument("output")
    sp.add_argument("--to", choices=("cube", "erp"), required=True)
    sp.add_argument("--yaw", type=float, default=0.0, help="face rotation in degrees (45 for the rotated set)")
    sp.add_argument("--face-size", type=int, default=None)
    sp.add_argument("--height", type=int, default=None, help="ERP height when projecting back")
    sp.add_argument("--preview", default=None, help="PNG strip of the six faces")
    sp.set_defaults(func=cmd_project)

    sp = sub.add_parser("convolve", help="apply the latitude-indexed Gabor stack to an ERP image")
    sp.add_argument("input")
    sp.add_argument("output")
    gabor_flags(sp)
    sp.add_argument("--aggregate", choices=AGGREGATES, default="mean")
    sp.set_defaults(func=cmd_convolve)

    sp = sub.add_parser("gradient", help="spherical Sobel gradients of a depth map")
    sp.add_argument("input")
    sp.add_argument("--out", default="gradient_out")
    figures_flag(sp)
    sp.set_defaults(func=cmd_gradient)

    sp = sub.add_parser("fuse", help="CS-UFM forward pass on two feature tensors")
    sp.add_argument("a")
    sp.add_argument("b")
    sp.add_argument("output")
    sp.add_argument("--weights", default=None, help="PGFW weights file; otherwise initialised from --seed")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--scheme", choices=("uniform", "constant"), default="uniform")
    sp.add_argument("--save-weights", default=None)
    sp.add_argument("--c-out", type=int, default=16)
    sp.add_argument("--aggregate", choices=AGGREGATES, default="mean")
    gabor_flags(sp)
    sp.set_defaults(func=cmd_fuse)

    sp = sub.add_parser("loss", help="berHu, spherical gradient and total loss as JSON")
    sp.add_argument("pred")
    sp.add_argument("gt")
    loss_flags(sp)
    sp.set_defaults(func=cmd_loss)

    sp = sub.add_parser("eval", help="depth metrics as JSON")
    sp.add_argument("pred")
    sp.add_argument("gt")
    sp.add_argument("mask", nargs="?", default=None)
    sp.add_argument("--median-scaling", action="store_true")
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("fit", help="gradient-descent fit of a depth map to ground truth")
    sp.add_argument("gt")
    sp.add_argument("output")
    sp.add_argument("--init", default="mean", help="initial depth file, or 'mean'")
    sp.add_argument("--steps", type=int, default=200)
    sp.add_argument("--lr", type=float, default=0.1)
    sp.add_argument("--trace", default=None, help="loss-trace CSV (default: output with .csv)")
    loss_flags(sp)
    figures_flag(sp)
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("gradcheck", help="finite-difference check of the loss gradient")
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_gradcheck)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        return args.func(args) or 0
    except (PanoGaborError, ValueError, OSError) as exc:
        err = exc.to_dict() if isinstance(exc, PanoGaborError) else {"error": type(exc).__name__, "message": str(exc)}
        sys.stderr.write(json.dumps(err, sort_keys=True) + "\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
