import filecmp
import json

import pytest
from click.testing import CliRunner

from nslab.cli import main


@pytest.fixture()
def runner():
    return CliRunner()


def _read(path):
    with open(path) as fh:
        return fh.read()


class TestPlumbing:
    def test_unknown_subcommand_usage_exit(self, runner):
        res = runner.invoke(main, ["no-such-command"])
        assert res.exit_code == 64

    def test_unknown_option_usage_exit(self, runner):
        res = runner.invoke(main, ["--bogus-flag"])
        assert res.exit_code == 64

    def test_malformed_config_rejected(self, runner, tmp_path):
        cfg = tmp_path / "cfg.txt"
        cfg.write_text("this line has no equals sign\n")
        res = runner.invoke(main, ["--config", str(cfg), "moments",
                                   "hilbert-growth", "--nmax", "3"])
        assert res.exit_code != 0

    def test_overlapping_regions_exit_2(self, runner, tmp_path):
        cfg = tmp_path / "cfg.txt"
        cfg.write_text("I=0,1\nJ=0.5,1.5\n")
        res = runner.invoke(main, ["--config", str(cfg), "--out",
                                   str(tmp_path), "reconstruct", "sweep"])
        assert res.exit_code == 2

    def test_csv_header_schema_and_hash(self, runner, tmp_path):
        res = runner.invoke(main, ["--out", str(tmp_path), "moments",
                                   "hilbert-growth", "--nmax", "3"])
        assert res.exit_code == 0
        head = _read(tmp_path / "hilbert_growth.csv").splitlines()[0]
        assert head.startswith("# schema=nsl-csv-1 config_hash=")
        summary = json.loads(_read(tmp_path / "hilbert_growth.json"))
        assert summary["config_hash"] == head.split("config_hash=")[1]

    def test_byte_deterministic_reruns(self, runner, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            res = runner.invoke(main, ["--out", str(out), "--seed", "3",
                                       "moments", "verify-bounds",
                                       "--npoly", "3", "--degree", "4"])
            assert res.exit_code == 0
        assert filecmp.cmp(a / "verify_bounds.csv", b / "verify_bounds.csv",
                           shallow=False)

    def test_seed_changes_hash(self, runner, tmp_path):
        heads = []
        for seed in ("0", "1"):
            out = tmp_path / seed
            res = runner.invoke(main, ["--out", str(out), "--seed", seed,
                                       "moments", "hilbert-growth",
                                       "--nmax", "2"])
            assert res.exit_code == 0
            heads.append(_read(out / "hilbert_growth.csv").splitlines()[0])
        assert heads[0] != heads[1]

    def test_svg_artifact_written(self, runner, tmp_path):
        res = runner.invoke(main, ["--out", str(tmp_path), "moments",
                                   "hilbert-growth", "--nmax", "3"])
        assert res.exit_code == 0
        svg = _read(tmp_path / "hilbert_growth.svg")
        assert svg.startswith("<svg") and "polyline" in svg


class TestExperiments:
    def test_hilbert_growth_tail_rate_window(self, runner, tmp_path):
        res = runner.invoke(main, ["--out", str(tmp_path), "moments",
                                   "hilbert-growth", "--nmax", "14"])
        assert res.exit_code == 0
        summary = json.loads(_read(tmp_path / "hilbert_growth.json"))
        lo, hi = summary["tail_rate_range"]
        assert 3.2 <= lo <= hi <= 3.7

    def test_verify_bounds_no_violations(self, runner, tmp_path):
        res = runner.invoke(main, ["--out", str(tmp_path), "moments",
                                   "verify-bounds", "--npoly", "5"])
        assert res.exit_code == 0
        summary = json.loads(_read(tmp_path / "verify_bounds.json"))
        assert summary["violations"] == 0

    def test_operators_crosscheck_small_and_threaded_identical(
            self, runner, tmp_path):
        outs = []
        for threads, sub in (("1", "t1"), ("4", "t4")):
            out = tmp_path / sub
            res = runner.invoke(main, ["--out", str(out), "--threads", threads,
                                       "operators", "crosscheck"])
            assert res.exit_code == 0
            outs.append(out)
        assert filecmp.cmp(outs[0] / "operators_crosscheck.csv",
                           outs[1] / "operators_crosscheck.csv", shallow=False)
        summary = json.loads(_read(outs[0] / "operators_crosscheck.json"))
        assert summary["worst_rel_err"] <= 1e-10

    def test_continuation_three_balls(self, runner, tmp_path):
        res = runner.invoke(main, ["--out", str(tmp_path), "continuation",
                                   "three-balls"])
        assert res.exit_code == 0
        summary = json.loads(_read(tmp_path / "continuation_three_balls.json"))
        n1, n2, n4 = summary["norms"]
        assert n1 <= n2 <= n4
        assert 0.0 < summary["alpha_hat"] <= 1.0 + 1e-12

    def test_runge_cost_curve(self, runner, tmp_path):
        res = runner.invoke(main, ["--out", str(tmp_path), "runge",
                                   "cost-curve"])
        assert res.exit_code == 0
        summary = json.loads(_read(tmp_path / "runge_cost_curve.json"))
        assert summary["fit"]["mu_hat"] > 0
        body = _read(tmp_path / "runge_cost_curve.csv").splitlines()
        assert body[1].split(",")[0] == "eps"
        for line in body[2:]:
            eps, achieved = map(float, line.split(",")[:2])
            assert achieved <= eps

    def test_runge_dual_ucp_positive_ratios(self, runner, tmp_path):
        res = runner.invoke(main, ["--out", str(tmp_path), "runge",
                                   "dual-ucp", "--trials", "10"])
        assert res.exit_code == 0
        summary = json.loads(_read(tmp_path / "runge_dual_ucp.json"))
        assert summary["min_rhs_over_vnorm"] >= 1e-12
        assert summary["reciprocity_defect"] <= 1e-8
