import csv
import json

import pytest

from msa_lab.application.exceptions import ConfigurationError, UnknownExperimentError
from msa_lab.application.runner import EXPERIMENTS, ExperimentRunner
from msa_lab.config import ExperimentConfig, load_experiment_config
from msa_lab.main import main
from msa_lab.presentation.cli import DESCRIPTIONS
from msa_lab.presentation.exceptions import EXIT_BOUND_VIOLATED, EXIT_FAILURE, EXIT_OK
from msa_lab.presentation.schemas import CSV_COLUMNS


def read_csv(path) -> list[dict]:
    with open(path, encoding="utf-8", newline="") as stream:
        return list(csv.DictReader(stream))


class TestRunner:
    def test_schedule_through_the_container(self, container):
        config = load_experiment_config(None, {"experiment": "schedule"})
        with container() as request_container:
            rows = request_container.get(ExperimentRunner)(config)
        assert rows[0].witnesses["Ls"][1] == "4096"
        assert rows[0].witnesses["ms"][1] == 2.0

    def test_unknown_experiment(self, container):
        with container() as request_container:
            runner = request_container.get(ExperimentRunner)
            with pytest.raises(UnknownExperimentError):
                runner(ExperimentConfig(experiment="nonsense"))

    def test_pairs_need_a_second_volume(self, container):
        config = load_experiment_config(None, {"experiment": "pairs", "samples": 2})
        with container() as request_container:
            with pytest.raises(ConfigurationError):
                request_container.get(ExperimentRunner)(config)

    def test_every_experiment_is_described(self):
        assert set(DESCRIPTIONS) == set(EXPERIMENTS)


class TestConfigFile:
    def test_overrides_win(self, write_config):
        path = write_config({"experiment": "wegner", "seed": 3, "sampling": {"n": 50}})
        config = load_experiment_config(path, {"seed": 9, "samples": 7, "out": "x.csv", "format": None})
        assert config.seed == 9
        assert config.sampling.n == 7
        assert config.output.path == "x.csv"
        assert config.output.format == "csv"

    def test_unknown_key(self, write_config):
        with pytest.raises(ConfigurationError):
            load_experiment_config(write_config({"experiment": "wegner", "bogus": 1}))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigurationError):
            load_experiment_config(tmp_path / "absent.yaml")


class TestMain:
    def test_schedule_csv(self, tmp_path, log_file):
        out = tmp_path / "schedule.csv"
        assert main(["schedule", "--out", str(out)]) == EXIT_OK
        with open(out, encoding="utf-8", newline="") as stream:
            header = next(csv.reader(stream))
        assert tuple(header) == CSV_COLUMNS
        assert read_csv(out)[0]["status"] == "ok"
        assert "Finished schedule" in log_file.read_text(encoding="utf-8")

    def test_jsonl_keeps_witnesses(self, tmp_path, log_file):
        out = tmp_path / "schedule.jsonl"
        assert main(["schedule", "--out", str(out), "--format", "jsonl"]) == EXIT_OK
        record = json.loads(out.read_text(encoding="utf-8").splitlines()[0])
        assert record["witnesses"]["ms"][1] == 2.0
        assert "timestamp" in record

    def test_invalid_config_fails(self, tmp_path, write_config, log_file):
        path = write_config({"experiment": "schedule", "bogus": 1})
        assert main(["schedule", "--config", str(path), "--out", str(tmp_path / "a.csv")]) == EXIT_FAILURE

    def test_domain_error_fails(self, tmp_path, write_config, log_file):
        path = write_config({"experiment": "tunneling", "geometry": {"volume": {"kind": "square"}}})
        assert main(["tunneling", "--config", str(path), "--out", str(tmp_path / "a.csv")]) == EXIT_FAILURE

    def test_strict_reports_violations(self, tmp_path, write_config, log_file):
        path = write_config(
            {
                "experiment": "tunneling",
                "disorder": {"g": 0.0},
                "geometry": {"volume": {"kind": "segment", "center": 10, "radius": 2}},
                "msa": {"m": 1.0},
                "sampling": {"n": 10},
            }
        )
        out = tmp_path / "tunneling.csv"
        args = ["tunneling", "--config", str(path), "--out", str(out)]
        assert main(args) == EXIT_OK
        assert main([*args, "--strict"]) == EXIT_BOUND_VIOLATED
        assert read_csv(out)[0]["status"] == "bound_violated"

    @pytest.mark.parametrize("name", EXPERIMENTS)
    def test_help_states_the_checked_statement(self, name, capsys):
        assert main([name, "--help"]) == EXIT_OK
        assert DESCRIPTIONS[name] in capsys.readouterr().out

    def test_unknown_subcommand_fails(self, capsys):
        assert main(["run", "wegner"]) == EXIT_FAILURE
        assert "invalid choice" in capsys.readouterr().err

    def test_list(self, capsys):
        assert main(["list"]) == EXIT_OK
        assert "wegner-cond" in capsys.readouterr().out

    def test_same_seed_same_records(self, tmp_path, log_file):
        first, second = tmp_path / "first.csv", tmp_path / "second.csv"
        for out, workers in ((first, "1"), (second, "3")):
            args = ["wegner", "--seed", "4", "--samples", "20", "--out", str(out), "--workers", workers]
            assert main(args) == EXIT_OK
        assert first.read_text(encoding="utf-8") == second.read_text(encoding="utf-8")

    def test_operator_dump(self, tmp_path, write_config, log_file):
        dump = tmp_path / "dumps" / "h.txt"
        path = write_config(
            {
                "experiment": "build",
                "geometry": {"volume": {"kind": "segment", "center": 3, "radius": 1}},
                "output": {"dump": str(dump)},
            }
        )
        assert main(["build", "--config", str(path), "--out", str(tmp_path / "b.csv")]) == EXIT_OK
        lines = dump.read_text(encoding="utf-8").splitlines()
        assert lines[0] == "# dimension 3"
        assert len(lines) == 2 + 7
