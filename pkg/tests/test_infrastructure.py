"""
Tests for random streams, parallel execution, file formats, loggers and
configuration loading.

Running Tests:
    pytest tests/test_infrastructure.py -v
"""
import numpy as np
import pandas as pd
import pytest

from panova.config import AppConfig, load_mapping
from panova.errors import ConfigError, InvalidInputError, NumericalError, ReplicateError
from panova.infrastructure.io import dumps_json, read_csv, read_json, read_z_samples, table_frame, write_csv, write_json
from panova.infrastructure.logging import ReplicateLogger, get_study_logger
from panova.infrastructure.parallel import child_seed, parallel_map, philox_rng, run_with_redraws


def _square(x):
    return x * x


# ──────────────────────────────────────────────────────────────────────────────
# Streams and workers
# ──────────────────────────────────────────────────────────────────────────────

def test_stream_is_seed_plus_index():
    assert np.array_equal(philox_rng(5, 2).random(4), philox_rng(7).random(4))
    assert not np.array_equal(philox_rng(5, 0).random(4), philox_rng(5, 1).random(4))


def test_child_seed_is_stable_and_keyed():
    assert child_seed(42, 1, 2) == child_seed(42, 1, 2)
    assert child_seed(42, 1, 2) != child_seed(42, 2, 1)


@pytest.mark.parametrize("n_jobs", [1, 2])
def test_parallel_map_keeps_order(n_jobs):
    assert parallel_map(_square, range(10), n_jobs=n_jobs) == [x * x for x in range(10)]


def test_redraws_continue_the_same_stream(tmp_path):
    calls = []

    def flaky(rng):
        value = rng.random()
        calls.append(value)
        if len(calls) < 3:
            raise NumericalError("bad resample")
        return value

    logger = ReplicateLogger("flaky", tmp_path)
    result = run_with_redraws(flaky, seed=3, index=1, max_redraws=5, logger=logger)
    assert result == philox_rng(3, 1).random(3)[2]
    record = logger.read()[0]
    assert (record["status"], record["redraws"], record["seed"]) == ("redrawn", 2, 4)


def test_redraw_budget_is_enforced():
    def always(rng):
        raise InvalidInputError("degenerate resample")

    with pytest.raises(ReplicateError, match="no usable resample after 3 draws") as info:
        run_with_redraws(always, seed=0, index=0, max_redraws=3)
    assert [entry["attempt"] for entry in info.value.replicate_log] == [1, 2, 3]


def test_other_errors_are_not_redrawn():
    def boom(rng):
        raise KeyError("bug")

    with pytest.raises(KeyError):
        run_with_redraws(boom, seed=0, index=0, max_redraws=3)


# ──────────────────────────────────────────────────────────────────────────────
# Files
# ──────────────────────────────────────────────────────────────────────────────

def test_csv_keeps_full_precision_next_to_rounded_values(tmp_path):
    frame = table_frame([{"source": "Models", "variance": 0.1 + 0.2}], rounded={"variance": 2})
    path = write_csv(tmp_path / "t.csv", frame)
    text = path.read_text()
    assert "0.30000000000000004" in text
    assert text.splitlines()[0] == "source,variance,variance_rounded"
    assert text.splitlines()[1].endswith(",0.3")


def test_read_csv_checks_columns_and_files(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("a,b\n1,2\n")
    assert read_csv(path, required=["a"]).shape == (1, 2)
    with pytest.raises(InvalidInputError, match="missing column"):
        read_csv(path, required=["c"])
    with pytest.raises(ConfigError, match="not found"):
        read_csv(tmp_path / "nope.csv")


@pytest.mark.parametrize(
    "name, content",
    [
        ("z.txt", "0.1\n0.2\n0.3\n"),
        ("z.csv", "z,other\n0.1,1\n0.2,1\n0.3,1\n"),
        ("z.json", '{"z_samples": [0.1, 0.2, 0.3]}'),
    ],
)
def test_read_z_samples_formats(tmp_path, name, content):
    path = tmp_path / name
    path.write_text(content)
    assert read_z_samples(path).tolist() == pytest.approx([0.1, 0.2, 0.3])


def test_json_round_trip_with_numpy(tmp_path):
    path = write_json(tmp_path / "nested" / "doc.json", {"terms": np.array([1.5, 2.5]), "n": 3})
    assert read_json(path) == {"terms": [1.5, 2.5], "n": 3}
    assert dumps_json({"x": 1}).startswith(b"{")


def test_malformed_json_names_the_position(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"a": ')
    with pytest.raises(InvalidInputError, match="malformed JSON"):
        read_json(path)


# ──────────────────────────────────────────────────────────────────────────────
# Loggers
# ──────────────────────────────────────────────────────────────────────────────

def test_study_trace_records_are_timestamped(tmp_path):
    logger = get_study_logger(tmp_path)
    logger.log_stage("fit", "start", n=40)
    logger.log_result("test", "asl", 0.66)
    records = logger.read()
    assert [r.get("stage") for r in records] == ["fit", "test"]
    assert records[0]["n"] == 40 and records[1]["value"] == 0.66
    assert all("timestamp" in r for r in records)
    assert (tmp_path / "study_trace.log").exists()


# ──────────────────────────────────────────────────────────────────────────────
# Configuration
# ──────────────────────────────────────────────────────────────────────────────

def test_threads_from_environment(monkeypatch):
    monkeypatch.setenv("PANOVA_THREADS", "4")
    assert AppConfig.default_for_development().runtime.threads == 4
    monkeypatch.setenv("PANOVA_THREADS", "many")
    with pytest.raises(ConfigError, match="PANOVA_THREADS"):
        AppConfig.default_for_development()


def test_config_from_yaml(tmp_path):
    path = tmp_path / "panova.yaml"
    path.write_text("fit:\n  cv_folds: 10\ntest:\n  J: 2000\n")
    config = AppConfig.from_file(path)
    assert config.fit.cv_folds == 10
    assert config.test.J == 2000
    assert config.intervals.alpha == 0.05


@pytest.mark.parametrize(
    "content",
    ["plots:\n  dpi: 300\n", "test:\n  J: 10\n", "test:\n  taus: [0.05, 1.5]\n"],
)
def test_bad_config_files(tmp_path, content):
    path = tmp_path / "panova.yaml"
    path.write_text(content)
    with pytest.raises(ConfigError):
        AppConfig.from_file(path)


def test_load_mapping_needs_a_mapping(tmp_path):
    path = tmp_path / "list.json"
    path.write_text("[1, 2]")
    with pytest.raises(ConfigError, match="mapping"):
        load_mapping(path)
    with pytest.raises(ConfigError, match="not found"):
        load_mapping(tmp_path / "missing.yaml")


def test_frame_written_by_table_frame_reads_back(tmp_path):
    rows = [{"n": 10, "asl": 0.25}, {"n": 20, "asl": 1.0}]
    frame = pd.read_csv(write_csv(tmp_path / "t.csv", table_frame(rows)))
    assert frame["asl"].tolist() == [0.25, 1.0]
