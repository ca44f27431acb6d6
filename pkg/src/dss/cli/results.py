import io
import logging
import os
from typing import Dict, List, Sequence

import numpy as np
import pandas as pd

from dss.errors import ResultsSchemaError
from dss.utils.logger import getLogger


logger: logging.Logger = getLogger(
    name=__name__,
    consoleLevel=logging.INFO,
    fileLevel=logging.DEBUG,
    log_file="cli/results.log",
)

SCHEMA_VERSION = 1
SCORES_COLUMNS = ["iteration", "scenario", "agent", "seed", "eval_score", "train_loss", "wall_ms"]
EVAL_COLUMNS = ["agent", "scenario", "seed", "score"]
PLOT_COLUMNS = ["iteration", "agent", "median_score", "seeds", "reference"]
PERFECT_EPISODE_SCORE = 16.0

_COLUMNS = {"scores": SCORES_COLUMNS, "eval": EVAL_COLUMNS, "plot": PLOT_COLUMNS}


def schema_header(kind: str) -> str:
    return f"# dss-{kind} schema={SCHEMA_VERSION}"


def write_csv(path: str, kind: str, frame: pd.DataFrame):
    """
    Writes ``frame`` under the versioned header line of ``kind``. Floats use
    ``repr`` precision so identical runs give identical bytes.
    """
    columns = _COLUMNS[kind]
    missing = [c for c in columns if c not in frame.columns]
    assert not missing, f"Missing columns {missing} for {kind} CSV"
    with open(path, "w", newline="") as f:
        f.write(schema_header(kind) + "\n")
        frame[columns].to_csv(f, index=False, float_format="%.17g", lineterminator="\n")


def read_csv(path: str, kind: str) -> pd.DataFrame:
    """
    Reads a CSV written by :func:`write_csv`.

    :raises ResultsSchemaError: When the header is missing, of another kind or
        of an unsupported version, or when columns are missing.
    """
    if not os.path.isfile(path):
        raise ResultsSchemaError(f"Results file {path} does not exist")
    with open(path, "r") as f:
        first = f.readline().strip()
        body = f.read()
    prefix = f"# dss-{kind} schema="
    if not first.startswith(prefix):
        raise ResultsSchemaError(f"{path} has no '{prefix}<n>' header line")
    version = first[len(prefix):]
    if version != str(SCHEMA_VERSION):
        raise ResultsSchemaError(
            f"{path} has schema version {version}; only {SCHEMA_VERSION} is supported"
        )
    frame = pd.read_csv(io.StringIO(body))
    missing = [c for c in _COLUMNS[kind] if c not in frame.columns]
    if missing:
        raise ResultsSchemaError(f"{path} lacks columns {missing}")
    return frame


def scores_frame(rows: List[Dict]) -> pd.DataFrame:
    return pd.DataFrame(rows, columns=SCORES_COLUMNS)


def plot_series(scores: Sequence[pd.DataFrame]) -> Dict[str, pd.DataFrame]:
    """
    Turns the ``scores.csv`` of one or more runs into one tidy frame per
    scenario: iteration, agent, the median over runs and seeds, the per-seed
    scores joined by ``;`` and the perfect-episode reference.

    :param scores: Frames read from ``scores.csv``.
    :type scores: Sequence[pd.DataFrame]
    :returns: Tidy frames keyed by scenario name.
    :rtype: Dict[str, pd.DataFrame]
    """
    combined = pd.concat(list(scores), ignore_index=True)
    series: Dict[str, pd.DataFrame] = {}
    for scenario, group in combined.groupby("scenario", sort=True):
        rows = []
        for (iteration, agent), cell in group.groupby(["iteration", "agent"], sort=True):
            values = cell.sort_values("seed")["eval_score"].to_numpy(dtype=np.float64)
            rows.append(
                {
                    "iteration": int(iteration),
                    "agent": agent,
                    "median_score": float(np.median(values)),
                    "seeds": ";".join(repr(float(v)) for v in values),
                    "reference": PERFECT_EPISODE_SCORE,
                }
            )
        series[str(scenario)] = pd.DataFrame(rows, columns=PLOT_COLUMNS)
    return series
