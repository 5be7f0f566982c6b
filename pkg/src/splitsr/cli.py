"""Command-line entry points: upscale, cost, eval, train, serve."""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import cost as cost_mod
from . import data, metrics, weightio
from .network import NetworkConfig, build, forward, preset, PRESETS
from .tensor import Tensor
from .trainer import DivergenceError, TrainConfig, train, write_trace_csv
from .zoom import ZoomEngine


def _load_config(args) -> NetworkConfig:
    if getattr(args, "preset", None):
        return preset(args.preset)
    if getattr(args, "config", None):
        with open(args.config) as fh:
            text = fh.read()
        if not text.strip():
            raise ValueError(f"empty config file {args.config!r}")
        return NetworkConfig.parse(text)
    return preset("latency")


def _parse_hw(text: str):
    h, _, w = text.lower().partition("x")
    return int(h), int(w)


def cmd_upscale(args) -> int:
    img = data.read_image(args.input)
    if args.model == "bilinear":
        sr = metrics.bilinear_method(args.scale)(img)
    else:
        net = weightio.load_weights(args.model)
        sr = forward(net, Tensor(img[None])).data[0]
    data.write_image(args.output, sr)
    print(f"wrote {args.output} ({sr.shape[2]}x{sr.shape[1]})")
    if args.reference:
        ref = data.read_image(args.reference)
        ya = metrics.rgb_to_y(np.clip(sr, 0, 255))[0]
        yb = metrics.rgb_to_y(ref)[0]
        p = metrics.psnr(ya, yb)
        s = metrics.ssim(ya, yb)
        ptxt = "inf" if math.isinf(p) else f"{p:.2f}"
        print(f"PSNR: {ptxt} dB  SSIM: {s:.4f}")
    return 0


def cmd_cost(args) -> int:
    hw = _parse_hw(args.input_size)
    if args.table:
        print(f"{'configuration':<24} {'params':>10}")
        base = preset("latency")
        for alpha in (0.125, 0.25, 0.5, 1.0):
            cfg = NetworkConfig(**{**base.to_dict(), "alpha": alpha})
            n = cost_mod.count(build(cfg), hw).params
            print(f"alpha = {alpha:<18} {n / 1000:>9.0f}k")
        for hi in (2, 3, 4):
            cfg = NetworkConfig(**{**base.to_dict(), "hybrid_index": hi})
            n = cost_mod.count(build(cfg), hw).params
            print(f"HI = {hi:<21} {n / 1000:>9.0f}k")
        for loc in ("fe", "fe+upsampling", "throughout"):
            cfg = NetworkConfig(**{**base.to_dict(),
                                   "replacement_location": loc})
            n = cost_mod.count(build(cfg), hw).params
            print(f"location = {loc:<15} {n / 1000:>9.0f}k")
        return 0
    config = _load_config(args)
    report = cost_mod.count(build(config), hw)
    if args.json:
        print(json.dumps(report.to_dict(), indent=2))
    else:
        print(f"params: {report.params}")
        print(f"macs:   {report.macs}")
        for stage, p, m in report.per_stage:
            print(f"  {stage:<12} params={p:<10} macs={m}")
        for kind, ratio in report.reductions.items():
            print(f"  reduction[{kind}] = {ratio:.6f}")
    return 0


def cmd_eval(args) -> int:
    pairs = data.load_dataset(args.dataset, args.scale)
    if args.model == "bilinear":
        method = metrics.bilinear_method(args.scale)
        method_id = "bilinear"
    else:
        net = weightio.load_weights(args.model)
        if net.config.scale != args.scale:
            raise ValueError(
                f"model is x{net.config.scale}, requested x{args.scale}")
        method = metrics.model_method(net)
        method_id = args.model
    report = metrics.evaluate(method, pairs, args.scale, shave=args.shave,
                              dataset_id=args.dataset, method_id=method_id)
    if args.json:
        print(json.dumps(report.to_dict(), indent=2))
    else:
        print(report.table())
    return 0


def cmd_train(args) -> int:
    config = _load_config(args)
    if args.synthetic:
        pairs = data.make_synthetic_dataset(args.synthetic_images,
                                            args.synthetic_size,
                                            config.scale, seed=args.seed)
    else:
        pairs = data.load_dataset(args.dataset, config.scale)
    net = build(config, seed=args.seed)
    tc = TrainConfig(learning_rate=args.lr, batch_size=args.batch_size,
                     hr_patch=args.hr_patch, steps=max(args.steps, 1),
                     seed=args.seed)
    if args.steps == 0:
        trace = []
    else:
        try:
            trace = train(net, pairs, tc)
        except DivergenceError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
    weightio.save_weights(net, args.out)
    if args.trace:
        write_trace_csv(trace, args.trace)
    if trace:
        print(f"trained {len(trace)} steps: loss {trace[0][2]:.4f} -> "
              f"{trace[-1][2]:.4f}")
    else:
        print("0 steps requested; wrote initialized weights")
    print(f"wrote {args.out}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .server import create_app

    net = weightio.load_weights(args.model)
    from .network import run

    def model_fn(patch):
        return run(net, patch.astype(np.float32))

    engine = ZoomEngine(model_fn, tile_size=args.tile_size)
    loaded = data.load_dataset(args.images, scale=1)
    for pair in loaded:
        engine.register_image(pair.id, pair.hr)
    engine.start_workers(args.workers)
    app = create_app(engine, args.ratings, static_dir=args.static)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="splitsr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("upscale", help="upscale a PNG image")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--model", default="bilinear",
                   help="weight file path or 'bilinear'")
    p.add_argument("--scale", type=int, default=4)
    p.add_argument("--reference", help="HR reference; prints PSNR/SSIM")
    p.set_defaults(func=cmd_upscale)

    p = sub.add_parser("cost", help="analytical parameter/MAC report")
    p.add_argument("--config", help="network config file (JSON or key=value)")
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--input-size", default="24x24")
    p.add_argument("--table", action="store_true",
                   help="print the hyperparameter sweep param table")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_cost)

    p = sub.add_parser("eval", help="PSNR/SSIM evaluation over a dataset")
    p.add_argument("--model", default="bilinear")
    p.add_argument("--dataset", required=True)
    p.add_argument("--scale", type=int, default=4)
    p.add_argument("--shave", type=int, default=None)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("train", help="toy-scale training")
    p.add_argument("--config")
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--dataset")
    p.add_argument("--synthetic", action="store_true")
    p.add_argument("--synthetic-images", type=int, default=64)
    p.add_argument("--synthetic-size", type=int, default=96)
    p.add_argument("--steps", type=int, default=200)
    p.add_argument("--lr", type=float, default=1e-4)
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument("--hr-patch", type=int, default=96)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--trace", help="loss trace CSV path")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("serve", help="run the local HTTP tile service")
    p.add_argument("--model", required=True)
    p.add_argument("--images", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8321)
    p.add_argument("--tile-size", type=int, default=256)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--ratings", default="ratings.jsonl")
    p.add_argument("--static", help="directory of viewer assets to serve")
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
