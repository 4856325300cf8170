"""The ``erupoint`` command line.

Every subcommand reads its inputs from files and writes its outputs to
files; logs go to standard error. Exit codes: 0 on success, 1 on invalid
input or usage, 2 on I/O errors.
"""
import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import torch

from erupoint import constants
from erupoint.body.human_model import build_all_humans
from erupoint.body.pool import AgentPool, generate_pool, write_pool
from erupoint.body.pose import ElevationGrid
from erupoint.config import Config
from erupoint.data.data_manager import DataManager
from erupoint.data.data_set import read_samples, write_samples
from erupoint.data.micro_scenes import generate_micro_benchmark
from erupoint.data.stats import describe_stats, load_lexicons, plot_stats
from erupoint.data.synthesis import synthesize_samples
from erupoint.evaluation.benchmark import (
    benchmark_table,
    summarize_benchmark,
)
from erupoint.evaluation.metrics import evaluate
from erupoint.fusion.checkpoint import save_checkpoint
from erupoint.fusion.features import build_examples
from erupoint.fusion.model import build_model
from erupoint.fusion.training import train_toy
from erupoint.geometry.io import write_ply
from erupoint.grounding.grounding_manager import (
    FusionGrounder,
    GeometricGrounder,
    GroundingManager,
    read_predictions,
    write_predictions,
)
from erupoint.placement.scene import load_scenes
from erupoint.selftest import run_selftest
from erupoint.utils import init_logging

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_IO = 2

GROUND_MODES = (
    constants.MODE_GESTURE,
    constants.MODE_LANG,
    constants.MODE_FULL,
    constants.MODE_FUSION,
)


class _ArgumentParser(argparse.ArgumentParser):
    """Usage errors exit with status 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _write_json(data: Dict[str, Any], path: str) -> None:
    with open(path, "w") as f:
        json.dump(data, f, indent=2, sort_keys=True)
        f.write("\n")


def _pose_kwargs(config: Config) -> Dict[str, Any]:
    return {
        "voxel_size": config.voxel_size,
        "n_points": config.agent_points,
        "sigma": config.perturb_sigma_deg,
        "bound": config.perturb_range_deg,
    }


def _load_data(args) -> DataManager:
    samples = read_samples(args.samples)
    scene_ids = sorted({s.scene_id for s in samples})
    scenes = load_scenes(args.scenes, scene_ids)
    return DataManager(samples, scenes, AgentPool.from_file(args.pool))


def cmd_pool(args, config: Config) -> int:
    models = build_all_humans(config.seed)
    pool = generate_pool(
        models,
        config.seed,
        grid=ElevationGrid(step=config.elevation_step_deg),
        **_pose_kwargs(config),
    )
    write_pool(pool, args.out, n_jobs=config.threads)
    logger.info("wrote %d agents to %s", len(pool), args.out)
    return EXIT_OK


def cmd_synth(args, config: Config) -> int:
    scenes = load_scenes(args.scenes, args.scene_ids)
    pool = AgentPool.from_file(args.pool)
    samples = synthesize_samples(
        scenes, pool, config.seed, config=config, n_jobs=config.threads
    )
    write_samples(samples, args.out)
    logger.info(
        "wrote %d samples over %d scenes to %s",
        len(samples),
        len(scenes),
        args.out,
    )
    return EXIT_OK


def cmd_compose(args, config: Config) -> int:
    data = _load_data(args)
    composed = data.compose(data.get_sample(args.sample_id))
    write_ply(composed.cloud, args.out)
    logger.info(
        "wrote %d scene and %d agent points to %s",
        composed.n_scene_points,
        len(composed.cloud) - composed.n_scene_points,
        args.out,
    )
    return EXIT_OK


def cmd_ground(args, config: Config) -> int:
    data = _load_data(args)
    if args.mode == constants.MODE_FUSION:
        if args.ckpt is None:
            raise ValueError("--ckpt is required in fusion mode")
        grounder = FusionGrounder.from_checkpoint(args.ckpt)
    else:
        grounder = GeometricGrounder(
            args.mode,
            load_lexicons(args.lexicons),
            w_g=config.w_g,
            w_l=config.w_l,
        )
    predictions = GroundingManager(data, grounder).predict()
    write_predictions(predictions, args.out)
    return EXIT_OK


def cmd_eval(args, config: Config) -> int:
    predictions = read_predictions(args.preds)
    samples = read_samples(args.samples)
    scenes = load_scenes(args.scenes, sorted({s.scene_id for s in samples}))
    report = evaluate(predictions, samples, scenes)
    _write_json(report.to_dict(), args.out)
    logger.info(
        "overall Acc@0.25 %.4f, Acc@0.5 %.4f",
        report.accuracy[constants.OVERALL][0.25],
        report.accuracy[constants.OVERALL][0.5],
    )
    return EXIT_OK


def cmd_stats(args, config: Config) -> int:
    samples = read_samples(args.samples)
    stats = describe_stats(samples, load_lexicons(args.lexicons))
    _write_json(stats.to_dict(), args.out)
    if args.plot:
        plot_stats(stats, args.plot)
    return EXIT_OK


def cmd_train_toy(args, config: Config) -> int:
    pool = AgentPool.from_file(args.pool)
    if args.samples:
        samples = read_samples(args.samples)
        if args.scenes is None:
            raise ValueError("--scenes is required with --samples")
        scenes = load_scenes(
            args.scenes, sorted({s.scene_id for s in samples})
        )
    else:
        bench = generate_micro_benchmark(
            args.micro_scenes,
            pool,
            config.seed,
            k_values=(2, 3, 4),
            config=config,
        )
        samples, scenes = bench.samples, bench.scenes

    model = build_model(config, seed=config.seed)
    examples = build_examples(samples, scenes, pool, model)
    model, trace = train_toy(
        examples,
        model,
        args.steps,
        config.seed,
        learning_rate=config.learning_rate,
        optimizer=config.optimizer,
        batch_size=config.batch_size,
    )
    save_checkpoint(
        model, args.ckpt, metadata={"steps": args.steps, "seed": config.seed}
    )
    if args.trace:
        _write_json(trace.to_dict(), args.trace)
    return EXIT_OK


def cmd_selftest(args, config: Config) -> int:
    return EXIT_OK if run_selftest(sys.stdout) else EXIT_INVALID


def cmd_bench(args, config: Config) -> int:
    pool = AgentPool.from_file(args.pool)
    bench = generate_micro_benchmark(
        args.n_scenes,
        pool,
        config.seed,
        k_values=tuple(args.k_values),
        n_distractors=args.distractors,
        config=config,
    )
    table = benchmark_table(
        bench,
        pool,
        load_lexicons(args.lexicons),
        w_g=config.w_g,
        w_l=config.w_l,
    )
    _write_json(summarize_benchmark(table), args.out)
    return EXIT_OK


COMMANDS = {
    "pool": cmd_pool,
    "synth": cmd_synth,
    "compose": cmd_compose,
    "ground": cmd_ground,
    "eval": cmd_eval,
    "stats": cmd_stats,
    "train-toy": cmd_train_toy,
    "selftest": cmd_selftest,
    "bench": cmd_bench,
}


def build_parser() -> argparse.ArgumentParser:
    common = _ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML file of config overrides")
    common.add_argument(
        "--threads", type=int, help="worker count; 0 uses every core"
    )
    common.add_argument("--seed", type=int, help="master random seed")
    common.add_argument(
        "--verbose", action="store_true", help="log debug messages"
    )

    parser = _ArgumentParser(
        prog="erupoint",
        description="Embodied reference understanding toolkit.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    sub = subparsers.add_parser(
        "pool", parents=[common], help="generate the agent pool"
    )
    sub.add_argument("--out", required=True)

    sub = subparsers.add_parser(
        "synth", parents=[common], help="place agents in scenes"
    )
    sub.add_argument("--scenes", required=True, help="scene directory")
    sub.add_argument("--pool", required=True)
    sub.add_argument("--out", required=True, help="samples JSONL")
    sub.add_argument("--scene-ids", nargs="+", dest="scene_ids")

    sub = subparsers.add_parser(
        "compose", parents=[common], help="write a scene with its agent"
    )
    _add_data_arguments(sub)
    sub.add_argument("--sample-id", required=True, dest="sample_id")
    sub.add_argument("--out", required=True, help="PLY file")

    sub = subparsers.add_parser(
        "ground", parents=[common], help="ground every sample"
    )
    _add_data_arguments(sub)
    sub.add_argument("--mode", choices=GROUND_MODES, required=True)
    sub.add_argument("--out", required=True, help="predictions JSONL")
    sub.add_argument("--ckpt", help="fusion checkpoint")
    sub.add_argument("--lexicons", help="lexicon directory")
    sub.add_argument("--w-g", type=float, dest="w_g")
    sub.add_argument("--w-l", type=float, dest="w_l")

    sub = subparsers.add_parser(
        "eval", parents=[common], help="score predictions"
    )
    sub.add_argument("--preds", required=True)
    sub.add_argument("--samples", required=True)
    sub.add_argument("--scenes", required=True)
    sub.add_argument("--out", required=True, help="report JSON")

    sub = subparsers.add_parser(
        "stats", parents=[common], help="description statistics"
    )
    sub.add_argument("--samples", required=True)
    sub.add_argument("--out", required=True, help="statistics JSON")
    sub.add_argument("--plot", help="figure file")
    sub.add_argument("--lexicons", help="lexicon directory")

    sub = subparsers.add_parser(
        "train-toy", parents=[common], help="train the fusion network"
    )
    sub.add_argument("--pool", required=True)
    sub.add_argument("--samples")
    sub.add_argument("--scenes")
    sub.add_argument(
        "--micro-scenes", type=int, default=200, dest="micro_scenes"
    )
    sub.add_argument("--steps", type=int, default=500)
    sub.add_argument("--ckpt", required=True)
    sub.add_argument("--trace", help="training trace JSON")

    subparsers.add_parser(
        "selftest", parents=[common], help="run the invariant checks"
    )

    sub = subparsers.add_parser(
        "bench", parents=[common], help="micro-benchmark accuracies"
    )
    sub.add_argument("--pool", required=True)
    sub.add_argument("--n-scenes", type=int, default=200, dest="n_scenes")
    sub.add_argument(
        "--k-values",
        type=int,
        nargs="+",
        default=[2, 3, 4, 5, 6],
        dest="k_values",
    )
    sub.add_argument("--distractors", type=int, default=0)
    sub.add_argument("--out", required=True, help="report JSON")
    sub.add_argument("--lexicons", help="lexicon directory")
    sub.add_argument("--w-g", type=float, dest="w_g")
    sub.add_argument("--w-l", type=float, dest="w_l")
    return parser


def _add_data_arguments(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--samples", required=True)
    sub.add_argument("--scenes", required=True)
    sub.add_argument("--pool", required=True)


def _make_config(args) -> Config:
    config = Config.from_file(args.config) if args.config else Config()
    return config.with_overrides(
        seed=args.seed,
        threads=args.threads,
        w_g=getattr(args, "w_g", None),
        w_l=getattr(args, "w_l", None),
    )


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Run one subcommand and return its exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code is None else int(e.code)

    init_logging(args.verbose)
    try:
        config = _make_config(args)
        if config.threads > 0:
            torch.set_num_threads(config.threads)
        return COMMANDS[args.command](args, config)
    except OSError as e:
        logger.error("%s", e)
        return EXIT_IO
    except (ValueError, RuntimeError, LookupError, FloatingPointError) as e:
        logger.error("%s", e)
        return EXIT_INVALID


def main(argv: Optional[List[str]] = None) -> None:
    sys.exit(run(argv))
