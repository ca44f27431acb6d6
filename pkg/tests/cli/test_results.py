import numpy as np
import pandas as pd
import pytest

from dss.cli.results import (
    PERFECT_EPISODE_SCORE,
    plot_series,
    read_csv,
    schema_header,
    scores_frame,
    write_csv,
)
from dss.errors import ResultsSchemaError


def scores(seed: int, values, scenario: str = "scenario_3") -> pd.DataFrame:
    return scores_frame(
        [
            {
                "iteration": i,
                "scenario": scenario,
                "agent": "muzero",
                "seed": seed,
                "eval_score": v,
                "train_loss": 0.5,
                "wall_ms": float("nan"),
            }
            for i, v in enumerate(values)
        ]
    )


def test_header_and_round_trip(tmp_path):
    path = str(tmp_path / "scores.csv")
    frame = scores(0, [15.123456789012345, 16.0])
    write_csv(path, "scores", frame)
    with open(path) as f:
        assert f.readline() == schema_header("scores") + "\n"
        assert f.readline().strip() == "iteration,scenario,agent,seed,eval_score,train_loss,wall_ms"
    restored = read_csv(path, "scores")
    assert restored.eval_score.tolist() == frame.eval_score.tolist()
    assert restored.wall_ms.isna().all()


def test_other_kind_is_rejected(tmp_path):
    path = str(tmp_path / "eval.csv")
    write_csv(path, "eval", pd.DataFrame([{"agent": "equal", "scenario": "s", "seed": 0, "score": 1.0}]))
    with pytest.raises(ResultsSchemaError):
        read_csv(path, "scores")


def test_unknown_version_is_rejected(tmp_path):
    path = tmp_path / "scores.csv"
    path.write_text("# dss-scores schema=2\niteration,scenario\n0,s\n")
    with pytest.raises(ResultsSchemaError, match="schema version 2"):
        read_csv(str(path), "scores")


def test_headerless_file_is_rejected(tmp_path):
    path = tmp_path / "scores.csv"
    scores(0, [1.0]).to_csv(path, index=False)
    with pytest.raises(ResultsSchemaError):
        read_csv(str(path), "scores")


def test_missing_columns_are_rejected(tmp_path):
    path = tmp_path / "scores.csv"
    path.write_text(schema_header("scores") + "\niteration,scenario\n0,s\n")
    with pytest.raises(ResultsSchemaError, match="lacks columns"):
        read_csv(str(path), "scores")


def test_single_run_gives_one_series():
    series = plot_series([scores(0, [10.0, 12.0, 14.0])])
    assert list(series) == ["scenario_3"]
    frame = series["scenario_3"]
    assert frame.median_score.tolist() == [10.0, 12.0, 14.0]
    assert (frame.reference == PERFECT_EPISODE_SCORE).all()


def test_median_over_seeds():
    runs = [scores(0, [10.0, 15.0]), scores(1, [12.0, 16.0]), scores(2, [11.0, 13.0])]
    frame = plot_series(runs)["scenario_3"]
    expected = np.median([[10.0, 15.0], [12.0, 16.0], [11.0, 13.0]], axis=0)
    assert frame.median_score.tolist() == expected.tolist()
    assert frame.seeds.tolist() == ["10.0;12.0;11.0", "15.0;16.0;13.0"]
    assert frame.reference.tolist() == [16.0, 16.0]


def test_scenarios_are_kept_apart():
    series = plot_series([scores(0, [10.0]), scores(0, [9.0], scenario="scenario_1")])
    assert sorted(series) == ["scenario_1", "scenario_3"]
