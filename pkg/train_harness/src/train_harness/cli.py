"""Train / infer entry points over featurized tensor directories."""

from __future__ import annotations

import argparse
import logging
import sys

from .infer import infer
from .models import ModelSpec
from .train import train


def _add_spec_flags(p):
    p.add_argument("--view", choices=["sv", "bev"], default="sv")
    p.add_argument("--resolution", type=int, choices=[64, 32, 16], default=64)
    p.add_argument("--in-channels", type=int, default=4)
    p.add_argument("--arch", choices=["unet", "lodnn"])
    p.add_argument("--gamma", type=float, default=2.0)
    p.add_argument("--lr", type=float, default=1e-4)
    p.add_argument("--patience", type=int, default=5)
    p.add_argument("--max-epochs", type=int, default=50)
    p.add_argument("--batch-size", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)


def _spec_from(args) -> ModelSpec:
    arch = args.arch or ("unet" if args.view == "sv" else "lodnn")
    return ModelSpec(
        view=args.view,
        resolution=args.resolution,
        in_channels=args.in_channels,
        arch=arch,
        loss_gamma=args.gamma,
        learning_rate=args.lr,
        patience=args.patience,
        max_epochs=args.max_epochs,
        batch_size=args.batch_size,
        seed=args.seed,
    )


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = argparse.ArgumentParser(prog="roadseg-train")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="fit a model on a featurized directory")
    _add_spec_flags(p)
    p.add_argument("--tensors", required=True, help="featurization output dir")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--log", help="training-log JSON path")
    p.set_defaults(cmd="train")

    p = sub.add_parser("infer", help="write confidence maps for a directory")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--tensors", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(cmd="infer")

    args = parser.parse_args(argv)
    try:
        if args.cmd == "train":
            result = train(_spec_from(args), args.tensors, args.checkpoint, args.log)
            print(f"best epoch {result['best_epoch']} "
                  f"val loss {result['best_val']:.6f}")
        else:
            written = infer(args.checkpoint, args.tensors, args.out)
            print(f"wrote {len(written)} confidence map(s) -> {args.out}")
        return 0
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
