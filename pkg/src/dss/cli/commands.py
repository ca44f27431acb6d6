from contextlib import contextmanager
from dataclasses import asdict
from importlib import metadata
import json
import logging
import os
import re
import shutil
import sys
from typing import Dict, Iterator, List, Optional

import pandas as pd
import yaml

from dss.cli.results import plot_series, read_csv, scores_frame, write_csv
from dss.cli.run_config import RunConfig
from dss.errors import CheckpointError, ConfigError, DssError, NonFiniteLossError
from dss.eval.agents import (
    Agent,
    AlternatingAgent,
    EqualSplitAgent,
    MuZeroAgent,
    OracleAgent,
    PlanningAgent,
    ProportionalAgent,
)
from dss.eval.evaluator import compare_agents
from dss.eval.oracle import oracle_plan
from dss.model.checkpoint import load_checkpoint, save_checkpoint
from dss.planning import mcts
from dss.radio.environment import action_space
from dss.scenarios.config import ScenarioConfig
from dss.scenarios.library import load_scenario
from dss.scenarios.randomization import RandomizationSpec
from dss.training.pipeline import IterationReport, Trainer
from dss.utils.logger import getLogger
from dss.utils.seeding import EVAL_STREAM_OFFSET, TRAIN_STREAM_OFFSET


logger: logging.Logger = getLogger(
    name=__name__,
    consoleLevel=logging.INFO,
    fileLevel=logging.DEBUG,
    log_file="cli/commands.log",
)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NON_FINITE = 2
EXIT_CHECKPOINT = 3


def exit_status(error: DssError) -> int:
    if isinstance(error, NonFiniteLossError):
        return EXIT_NON_FINITE
    if isinstance(error, CheckpointError):
        return EXIT_CHECKPOINT
    return EXIT_CONFIG


def package_version() -> str:
    try:
        return metadata.version("dss-planner")
    except metadata.PackageNotFoundError:
        return "unknown"


def _slug(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", name)


@contextmanager
def staged_run_dir(out_dir: str, overwrite: bool) -> Iterator[str]:
    """
    Yields a private staging directory that replaces ``out_dir`` when the
    block exits, also when it raises, so partial diagnostics survive.

    :raises ConfigError: If ``out_dir`` exists and ``overwrite`` is not set.
    """
    out_dir = os.path.abspath(out_dir)
    if os.path.exists(out_dir) and not overwrite:
        raise ConfigError(f"Run directory {out_dir} exists; pass --overwrite to replace it")
    staging = f"{out_dir}.partial-{os.getpid()}"
    shutil.rmtree(staging, ignore_errors=True)
    os.makedirs(staging)
    try:
        yield staging
    finally:
        if os.path.exists(out_dir):
            shutil.rmtree(out_dir)
        os.replace(staging, out_dir)
        logger.info(f"Wrote {out_dir}")


def write_config(run_dir: str, config: RunConfig):
    with open(os.path.join(run_dir, "config.yaml"), "w") as f:
        f.write("# Effective configuration\n")
        f.write(yaml.safe_dump(config.to_dict(), sort_keys=True))
        if config.source_text:
            f.write("# Input file, verbatim\n")
            for line in config.source_text.splitlines():
                f.write(f"# {line}\n")


def write_manifest(run_dir: str, config: RunConfig, scenario: ScenarioConfig, extra: Optional[Dict] = None):
    manifest = {
        "command": config.command,
        "argv": list(sys.argv),
        "package_version": package_version(),
        "seed": config.seed,
        "seed_streams": {
            "episode": "SeedSequence([seed, iteration, episode])",
            "evaluation": f"SeedSequence([seed, {EVAL_STREAM_OFFSET} + k])",
            "batches": f"SeedSequence([seed, {TRAIN_STREAM_OFFSET} + iteration])",
        },
        "scenario": scenario.name,
        "scenario_hash": scenario.content_hash(),
        "action_count": scenario.action_count,
    }
    manifest.update(extra or {})
    with open(os.path.join(run_dir, "manifest.json"), "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True, default=str)


def resolve_scenario(config: RunConfig) -> ScenarioConfig:
    scenario = load_scenario(config.scenario, config.action_count)
    if config.scenario_overrides:
        scenario = scenario.with_overrides(**config.scenario_overrides)
    return scenario


def cmd_train(config: RunConfig) -> int:
    """
    Trains on one scenario for ``config.train.iterations`` iterations.

    Every iteration appends one row to ``scores.csv`` and writes
    ``checkpoints/iter_XXXX.ckpt``. A diverging loss leaves
    ``diagnostics.json`` in the run directory.

    :param config: Resolved run configuration.
    :type config: RunConfig
    :returns: The exit status.
    :rtype: int
    """
    try:
        scenario = resolve_scenario(config)
        randomization = None if config.randomize else RandomizationSpec.fixed(scenario)
        trainer = Trainer(scenario, config.train, config.search, randomization, seed=config.seed)
        with staged_run_dir(config.out_dir, config.overwrite) as run_dir:
            write_config(run_dir, config)
            write_manifest(
                run_dir,
                config,
                trainer.scenario,
                {"network": asdict(trainer.network_config)},
            )
            rows: List[Dict] = []
            scores_path = os.path.join(run_dir, "scores.csv")
            write_csv(scores_path, "scores", scores_frame(rows))

            def on_iteration(report: IterationReport, trainer: Trainer):
                save_checkpoint(
                    os.path.join(run_dir, "checkpoints", f"iter_{report.iteration:04d}.ckpt"),
                    trainer.network,
                )
                rows.append(
                    {
                        "iteration": report.iteration,
                        "scenario": trainer.scenario.name,
                        "agent": "muzero",
                        "seed": config.seed,
                        "eval_score": report.eval_score,
                        "train_loss": report.train_loss,
                        "wall_ms": report.wall_ms if config.record_wall_time else float("nan"),
                    }
                )
                write_csv(scores_path, "scores", scores_frame(rows))

            try:
                trainer.train(on_iteration=on_iteration)
            except NonFiniteLossError as e:
                with open(os.path.join(run_dir, "diagnostics.json"), "w") as f:
                    json.dump(e.diagnostics, f, indent=2, default=str)
                raise
    except DssError as e:
        logger.error(f"train failed: {e}")
        return exit_status(e)
    return EXIT_OK


def build_agents(config: RunConfig, network) -> List[Agent]:
    agents: List[Agent] = []
    for name in config.agents:
        if name == "muzero":
            agents.append(MuZeroAgent(network))
        elif name == "proportional":
            agents.append(ProportionalAgent())
        elif name == "equal":
            agents.append(EqualSplitAgent())
        elif name == "alternating":
            agents.extend([AlternatingAgent(), AlternatingAgent(lte_first=True)])
        elif name == "oracle":
            agents.append(OracleAgent(node_budget=config.node_budget))
        else:
            raise ConfigError(
                f"Unknown agent {name}. Available agents "
                "['muzero', 'proportional', 'equal', 'alternating', 'oracle']"
            )
    if config.experimental_search:
        agents.append(PlanningAgent(network, config.search, seed=config.seed))
    if not agents:
        raise ConfigError("eval needs at least one agent")
    return agents


def cmd_eval(config: RunConfig) -> int:
    """
    Evaluates a checkpoint and the baselines on the same seeds and writes
    ``eval.csv``. The learned agent's dynamics and search counters are
    written to the manifest; both stay at zero.
    """
    try:
        network = load_checkpoint(config.checkpoint)
        scenario = resolve_scenario(config)
        if scenario.window != network.config.window:
            scenario = scenario.with_overrides(window=network.config.window)
        if scenario.observation_size != network.config.obs_dim:
            raise ConfigError(
                f"Checkpoint expects {network.config.obs_dim} observation entries, "
                f"scenario {scenario.name} produces {scenario.observation_size}"
            )
        if scenario.action_count != network.config.action_count:
            raise ConfigError(
                f"Checkpoint has {network.config.action_count} actions, "
                f"scenario {scenario.name} has {scenario.action_count}"
            )
        agents = build_agents(config, network)
        with staged_run_dir(config.out_dir, config.overwrite) as run_dir:
            write_config(run_dir, config)
            network.reset_call_counts()
            searches = mcts.search_invocations["searches"]
            frames = []
            purity = {}
            for agent in agents:
                frames.append(compare_agents([agent], scenario, config.seeds))
                if isinstance(agent, MuZeroAgent):
                    purity = {
                        "dynamics_calls": network.calls["dynamics"],
                        "searches": mcts.search_invocations["searches"] - searches,
                    }
            frame = pd.concat(frames, ignore_index=True)
            write_csv(os.path.join(run_dir, "eval.csv"), "eval", frame)
            write_manifest(
                run_dir,
                config,
                scenario,
                {"checkpoint": os.path.abspath(config.checkpoint), "eval_seeds": config.seeds, "purity": purity},
            )
            for agent_name, group in frame.groupby("agent", sort=False):
                logger.info(f"{agent_name}: median {group['score'].median():.6f}")
    except DssError as e:
        logger.error(f"eval failed: {e}")
        return exit_status(e)
    return EXIT_OK


def cmd_oracle(config: RunConfig) -> int:
    """
    Runs the exact planner on the true environment and writes ``oracle.json``.
    """
    try:
        scenario = resolve_scenario(config)
        plan = oracle_plan(
            scenario,
            horizon=config.oracle_horizon,
            seed=config.seed,
            node_budget=config.node_budget,
        )
        actions = action_space(scenario.action_count, scenario.radio.total_prbs)
        with staged_run_dir(config.out_dir, config.overwrite) as run_dir:
            write_config(run_dir, config)
            write_manifest(run_dir, config, scenario)
            payload = plan.to_dict()
            payload["scenario"] = scenario.name
            payload["lte_prbs"] = [actions[a].lte_prbs for a in plan.actions]
            with open(os.path.join(run_dir, "oracle.json"), "w") as f:
                json.dump(payload, f, indent=2)
    except DssError as e:
        logger.error(f"oracle failed: {e}")
        return exit_status(e)
    return EXIT_OK


def cmd_export_plot_data(config: RunConfig) -> int:
    """
    Reads ``scores.csv`` of every run in ``config.run_dirs`` and writes one
    tidy ``plot_<scenario>.csv`` per scenario.
    """
    try:
        scores = [read_csv(os.path.join(d, "scores.csv"), "scores") for d in config.run_dirs]
        series = plot_series(scores)
        with staged_run_dir(config.out_dir, config.overwrite) as run_dir:
            write_config(run_dir, config)
            for scenario, frame in series.items():
                write_csv(os.path.join(run_dir, f"plot_{_slug(scenario)}.csv"), "plot", frame)
    except DssError as e:
        logger.error(f"export-plot-data failed: {e}")
        return exit_status(e)
    return EXIT_OK


COMMAND_HANDLERS = {
    "train": cmd_train,
    "eval": cmd_eval,
    "oracle": cmd_oracle,
    "export-plot-data": cmd_export_plot_data,
}
