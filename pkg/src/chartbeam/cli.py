"""Command-line interface: generate, chart, train, eval, run, compare.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

import argparse
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import beamform, nn, pipeline
from .chart import load_chart, oos_embed_batch, save_chart
from .errors import (
    ChartbeamError,
    ConfigError,
    ConvergenceFailureError,
    DisconnectedGraphError,
    EmptyPathSetError,
    NonFiniteLossError,
    ShadowedSceneError,
    ZeroChannelError,
    ZeroPrecoderError,
)
from .scene import DOWNLINK_BS2, UPLINK_BS1, Dataset, generate_dataset

logger = logging.getLogger(__name__)

TARGET_NAMES = {"bs1_ul": UPLINK_BS1, "bs2_dl": DOWNLINK_BS2}

_NUMERICAL_ERRORS = (
    ConvergenceFailureError, NonFiniteLossError, DisconnectedGraphError,
    ZeroChannelError, ZeroPrecoderError, EmptyPathSetError, ShadowedSceneError,
)


def _load_run_config(path):
    if path is None:
        return pipeline.default_config()
    return pipeline.load_config(path)


def cmd_generate(args):
    config = _load_run_config(args.config)
    dataset = generate_dataset(config.scene)
    dataset.save(Path(args.out))
    print(f"dataset: {dataset.num_users} users -> {args.out}")
    return 0


def cmd_chart(args):
    dataset = Dataset.load(Path(args.dataset))
    train_idx = None
    if args.mode == "on_the_fly":
        train_idx, _ = pipeline.split(dataset.num_users, args.fraction,
                                      args.split_seed)
    chart, anchor_indices, _ = pipeline.build_chart(
        dataset, args.mode, args.dim, args.k, train_idx=train_idx)
    save_chart(chart, Path(args.out), dataset.content_hash(), UPLINK_BS1,
               anchor_indices)
    print(f"chart: {chart.dim}x{chart.n}, sigma={chart.sigma:.4g} -> {args.out}")
    return 0


def _train_inputs_from_chart(chart, anchor_indices, train_idx):
    anchor_indices = np.asarray(anchor_indices)
    if anchor_indices.size == np.max(anchor_indices) + 1 and np.array_equal(
            anchor_indices, np.arange(anchor_indices.size)):
        return chart.latents[:, train_idx].T  # one-shot chart over all users
    if not np.array_equal(np.sort(anchor_indices), train_idx):
        raise ConfigError(
            "chart anchors do not match the training split; "
            "re-chart or adjust --fraction/--split-seed")
    return chart.latents.T


def cmd_train(args):
    dataset = Dataset.load(Path(args.dataset))
    band = TARGET_NAMES[args.target]
    train_idx, _ = pipeline.split(dataset.num_users, args.fraction,
                                  args.split_seed)
    chart_path = None
    if args.locations:
        inputs = dataset.locations[train_idx]
    else:
        if args.chart is None:
            raise ConfigError("pass --chart <dir> or --locations")
        chart_path = Path(args.chart).resolve()
        chart, anchor_indices, _ = load_chart(chart_path, dataset)
        inputs = _train_inputs_from_chart(chart, anchor_indices, train_idx)
    targets = dataset.central_subcarrier(band, train_idx)
    gamma = args.gamma if args.gamma else pipeline.default_gamma(inputs)
    model = nn.build_model(
        dim_in=inputs.shape[1], num_antennas=dataset.scene.num_antennas,
        features=args.features, gamma=gamma, seed=args.init_seed)
    history = nn.train(model, inputs, targets, epochs=args.epochs,
                       batch_size=args.batch_size, seed=args.shuffle_seed,
                       lr=args.lr)
    nn.save_model(model, Path(args.out), extra={
        "variant": args.name,
        "input": "locations" if args.locations else "chart",
        "target": band,
        "chart": str(chart_path) if chart_path else None,
        "split": {"fraction": args.fraction, "seed": args.split_seed},
        "loss_history": history,
    })
    print(f"model: final train loss {history[-1]:.4f} -> {args.out}"
          if history else f"model (untrained) -> {args.out}")
    return 0


def cmd_eval(args):
    dataset = Dataset.load(Path(args.dataset))
    model, manifest = nn.load_model(Path(args.model))
    band = manifest["target"]
    split_info = manifest["split"]
    _, test_idx = pipeline.split(dataset.num_users, split_info["fraction"],
                                 split_info["seed"])
    if manifest["input"] == "locations":
        inputs = dataset.locations[test_idx]
    else:
        chart_dir = Path(args.chart) if args.chart else Path(manifest["chart"])
        chart, anchor_indices, _ = load_chart(chart_dir, dataset)
        anchor_indices = np.asarray(anchor_indices)
        if np.array_equal(anchor_indices, np.arange(dataset.num_users)):
            inputs = chart.latents[:, test_idx].T
        else:
            inputs = oos_embed_batch(chart, dataset.channels(UPLINK_BS1, test_idx))
    targets = dataset.central_subcarrier(band, test_idx)
    report = beamform.evaluate(
        model, inputs, targets,
        locations=dataset.locations[test_idx], los=dataset.los[test_idx],
        variant=manifest.get("variant", "model"),
        transfer_dim=inputs.shape[1],
        num_subcarriers=dataset.scene.num_subcarriers,
        meta={"target": band, "dataset_hash": dataset.content_hash(),
              "bs_positions": [list(p) for p in dataset.scene.bs_positions]})
    report.save(Path(args.out))
    summary = report.summary()
    print(f"median eta {summary['eta_median']:.4f} "
          f"(mean {summary['eta_mean']:.4f}) -> {args.out}")
    return 0


def cmd_run(args):
    config = _load_run_config(args.config)
    report = pipeline.run_variant(args.variant, config, Path(args.out))
    summary = report.summary()
    print(f"{args.variant}: median eta {summary['eta_median']:.4f} "
          f"(mean {summary['eta_mean']:.4f}, p10 {summary['eta_p10']:.4f})")
    return 0


def cmd_compare(args):
    result, text = pipeline.compare_report_dirs(
        [Path(d) for d in args.reports],
        Path(args.out) if args.out else None)
    print(text)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="chartbeam",
        description="beamforming experiments on learned channel charts")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="synthesize a dataset")
    p.add_argument("--config", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("chart", help="build a channel chart")
    p.add_argument("--dataset", required=True)
    p.add_argument("--mode", choices=["one_shot", "on_the_fly"], required=True)
    p.add_argument("--dim", type=int, default=5)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--fraction", type=float, default=0.7)
    p.add_argument("--split-seed", type=int, default=202)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_chart)

    p = sub.add_parser("train", help="train the beamformer")
    p.add_argument("--chart", default=None)
    p.add_argument("--locations", action="store_true",
                   help="use true locations instead of a chart")
    p.add_argument("--dataset", required=True)
    p.add_argument("--target", choices=sorted(TARGET_NAMES), required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--name", default="custom")
    p.add_argument("--fraction", type=float, default=0.7)
    p.add_argument("--split-seed", type=int, default=202)
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--batch-size", type=int, default=100)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--features", type=int, default=600)
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--init-seed", type=int, default=303)
    p.add_argument("--shuffle-seed", type=int, default=404)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--chart", default=None,
                   help="override the chart directory recorded in the model")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("run", help="run one variant end to end")
    p.add_argument("--variant", choices=sorted(pipeline.VARIANTS), required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", help="tabulate variant reports")
    p.add_argument("--reports", nargs="+", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_compare)

    return parser


def main(argv=None):
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except (ConfigError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ChartbeamError as exc:  # residual toolkit errors are config-shaped
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
