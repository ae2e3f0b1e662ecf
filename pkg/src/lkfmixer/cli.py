"""Command-line entry point.

Exit codes: 0 success, 1 runtime or data error, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import logging
import sys
from pathlib import Path

from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .complexity import count_macs
from .erf import erf_map, support_radius
from .imaging import ImageFormatError, PlanarImage, degrade, load_png, save_png
from .metrics import psnr_y, ssim_y
from .model import PRESETS, Model, ModelConfig, check_params, init_params, preset
from .tensor import ShapeError
from .train import Pair, TrainConfig, synthetic_dataset, train_toy, write_loss_csv

log = logging.getLogger("lkfmixer")

MODEL_KEYS = {f.name: f.type for f in dataclasses.fields(ModelConfig)}
TRAIN_KEYS = {f.name: f.type for f in dataclasses.fields(TrainConfig)}
TOY_MODEL = dict(channels=8, n_fmb=2, kernel=7)


class UsageError(Exception):
    pass


def read_config_file(path: str) -> dict[str, str]:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc.strerror}") from None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in MODEL_KEYS and key not in TRAIN_KEYS:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = value
    return out


def _coerce(key: str, value):
    if value is None or not isinstance(value, str):
        return value
    typ = str(MODEL_KEYS.get(key) or TRAIN_KEYS.get(key))
    try:
        if "int" in typ:
            return None if value.lower() == "none" else int(value)
        if "float" in typ:
            return float(value)
    except ValueError:
        raise UsageError(f"bad value for {key}: {value!r}") from None
    return value


def _merged(args, keys: dict, base: dict) -> dict:
    values = dict(base)
    if getattr(args, "config", None):
        values.update({k: v for k, v in read_config_file(args.config).items() if k in keys})
    for k in keys:
        v = getattr(args, k, None)
        if v is not None:
            values[k] = v
    return {k: _coerce(k, v) for k, v in values.items()}


def model_config(args, default_variant: str | None = "T") -> ModelConfig:
    variant = getattr(args, "variant", None) or default_variant
    base = dict(PRESETS[variant.upper()]) if variant else dict(TOY_MODEL)
    if getattr(args, "scale", None) is not None:
        base["scale"] = args.scale
    try:
        return ModelConfig(**_merged(args, MODEL_KEYS, base))
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None


def train_config(args) -> TrainConfig:
    try:
        return TrainConfig(**_merged(args, TRAIN_KEYS, {}))
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None


def _hr_size(text: str) -> tuple[int, int]:
    try:
        w, h = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected WxH, got {text!r}") from None
    if w < 1 or h < 1:
        raise argparse.ArgumentTypeError("HR size must be positive")
    return w, h


def _add_model_flags(p: argparse.ArgumentParser, variant_default_note: str) -> None:
    p.add_argument("--variant", choices=["T", "B", "L", "t", "b", "l"],
                   help=f"preset ({variant_default_note})")
    p.add_argument("--channels", type=int)
    p.add_argument("--n-fmb", dest="n_fmb", type=int)
    p.add_argument("--kernel", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--distill-width", dest="distill_width", type=int)
    p.add_argument("--config", help="key = value file overriding model/train settings")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lkfmixer", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("summarize", help="parameter and MAC report")
    _add_model_flags(p, "default T")
    p.add_argument("--scale", type=int, choices=[2, 3, 4], default=4)
    p.add_argument("--hr-size", type=_hr_size, default=(1280, 720), metavar="WxH")
    p.add_argument("--json", action="store_true", help="JSON lines instead of a table")

    p = sub.add_parser("sr", help="super-resolve one PNG")
    _add_model_flags(p, "default T")
    p.add_argument("--weights", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--scale", type=int, choices=[2, 3, 4], required=True)

    p = sub.add_parser("degrade", help="bicubic downsampling")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--scale", type=int, choices=[2, 3, 4], required=True)

    p = sub.add_parser("eval", help="Y-channel PSNR/SSIM of SR against HR images")
    p.add_argument("--hr", required=True, help="directory of ground-truth PNGs")
    p.add_argument("--sr", required=True, help="directory of super-resolved PNGs")
    p.add_argument("--scale", type=int, choices=[2, 3, 4], required=True)
    p.add_argument("--output", help="also write the CSV here")

    p = sub.add_parser("train-toy", aliases=["train_toy"], help="small-scale training run")
    _add_model_flags(p, "default: 8 channels, 2 FMBs, kernel 7")
    p.add_argument("--data", help="directory of HR PNGs; LR is made by bicubic degradation")
    p.add_argument("--synthetic", type=int, metavar="N",
                   help="train on N synthetic images instead of --data")
    p.add_argument("--out", required=True, help="checkpoint path")
    p.add_argument("--loss-csv", help="loss curve path (default: <out>.loss.csv)")
    p.add_argument("--scale", type=int, choices=[2, 3, 4])
    p.add_argument("--iters", dest="total_iters", type=int)
    p.add_argument("--batch", type=int)
    p.add_argument("--patch", dest="lr_patch", type=int)
    p.add_argument("--lr-init", dest="lr_init", type=float)
    p.add_argument("--lr-min", dest="lr_min", type=float)
    p.add_argument("--fft-weight", dest="fft_weight", type=float)
    p.add_argument("--seed", type=int)

    p = sub.add_parser("erf", help="effective receptive field map")
    _add_model_flags(p, "default T")
    p.add_argument("--weights", help="checkpoint; random init when omitted")
    p.add_argument("--scale", type=int, choices=[2, 3, 4])
    p.add_argument("--size", type=int, default=64)
    p.add_argument("--samples", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="PGM output path")
    p.add_argument("--csv", help="also dump the map as CSV")
    return parser


# -- commands -----------------------------------------------------------------


def cmd_summarize(args) -> int:
    cfg = model_config(args)
    w, h = args.hr_size
    s = cfg.scale
    if h % s or w % s:
        h, w = h // s * s, w // s * s
        print(f"# HR size rounded down to {w}x{h} (multiple of scale {s})", file=sys.stderr)
    report = count_macs(cfg, h, w)
    print(report.to_json_lines() if args.json else report.render_text())
    return 0


def _load_model(args, weights: str) -> Model:
    cfg = model_config(args)
    params = load_checkpoint(weights)
    check_params(params, cfg)
    return Model(cfg, params)


def cmd_sr(args) -> int:
    model = _load_model(args, args.weights)
    image = load_png(args.input)
    out = model(image.to_tensor())
    save_png(PlanarImage.from_tensor(out), args.output)
    return 0


def cmd_degrade(args) -> int:
    save_png(degrade(load_png(args.input), args.scale), args.output)
    return 0


def _pngs(directory: str) -> dict[str, Path]:
    d = Path(directory)
    if not d.is_dir():
        raise FileNotFoundError(f"no such directory: {directory}")
    return {p.stem: p for p in sorted(d.glob("*.png"))}


def evaluate_dirs(hr_dir: str, sr_dir: str, scale: int) -> list[tuple[str, float, float]]:
    hr, sr = _pngs(hr_dir), _pngs(sr_dir)
    if not sr:
        raise FileNotFoundError(f"no PNG files in {sr_dir}")
    rows = []
    for stem in sorted(sr):
        if stem not in hr:
            raise FileNotFoundError(f"{sr[stem].name}: no HR image with stem {stem!r}")
        a, b = load_png(hr[stem]), load_png(sr[stem])
        if (a.height, a.width) != (b.height, b.width):
            if a.height // scale * scale == b.height and a.width // scale * scale == b.width:
                a = a.crop(b.height, b.width)
            else:
                raise ShapeError(
                    f"{stem}: HR {a.width}x{a.height} and SR {b.width}x{b.height} do not match"
                )
        rows.append((sr[stem].name, psnr_y(a, b, scale), ssim_y(a, b, scale)))
    return rows


def cmd_eval(args) -> int:
    rows = evaluate_dirs(args.hr, args.sr, args.scale)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["filename", "psnr_db", "ssim"])
    for name, p, s in rows:
        w.writerow([name, f"{p:.6f}", f"{s:.6f}"])
    mean_p = sum(r[1] for r in rows) / len(rows)
    mean_s = sum(r[2] for r in rows) / len(rows)
    w.writerow(["mean", f"{mean_p:.6f}", f"{mean_s:.6f}"])
    sys.stdout.write(buf.getvalue())
    if args.output:
        Path(args.output).write_text(buf.getvalue())
    return 0


def cmd_train_toy(args) -> int:
    cfg = model_config(args, default_variant=None)
    tcfg = train_config(args)
    if args.data and args.synthetic:
        raise UsageError("give either --data or --synthetic, not both")
    if args.data:
        if not Path(args.data).is_dir():
            raise FileNotFoundError(f"no such directory: {args.data}")
        files = sorted(Path(args.data).glob("*.png"))
        if not files:
            raise FileNotFoundError(f"no PNG files in {args.data}")
        dataset = []
        for f in files:
            hr = load_png(f)
            hr = hr.crop(hr.height // cfg.scale * cfg.scale, hr.width // cfg.scale * cfg.scale)
            dataset.append(Pair.from_images(degrade(hr, cfg.scale), hr))
    elif args.synthetic:
        dataset = synthetic_dataset(args.synthetic, tcfg.lr_patch * cfg.scale * 2, cfg.scale, tcfg.seed)
    else:
        raise UsageError("one of --data or --synthetic is required")
    result = train_toy(cfg, tcfg, dataset)
    save_checkpoint(result.params, args.out)
    write_loss_csv(result.history, args.loss_csv or f"{args.out}.loss.csv")
    first, last = result.history[0]["total"], result.history[-1]["total"]
    print(f"trained {tcfg.total_iters} iters: loss {first:.5f} -> {last:.5f}")
    return 0


def cmd_erf(args) -> int:
    cfg = model_config(args)
    if args.weights:
        model = _load_model(args, args.weights)
    else:
        model = Model(cfg, init_params(cfg, args.seed))
    erf = erf_map(model, args.size, samples=args.samples, seed=args.seed)
    erf.to_pgm(args.out)
    if args.csv:
        erf.to_csv(args.csv)
    print(f"support radius @1%: {support_radius(erf, 0.01)} px")
    return 0


COMMANDS = {
    "summarize": cmd_summarize,
    "sr": cmd_sr,
    "degrade": cmd_degrade,
    "eval": cmd_eval,
    "train-toy": cmd_train_toy,
    "train_toy": cmd_train_toy,
    "erf": cmd_erf,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return 2
    except (FileNotFoundError, CheckpointError, ShapeError, ImageFormatError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
