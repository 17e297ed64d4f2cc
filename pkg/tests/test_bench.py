"""Tests for the suite runner, summary tables, and performance profiles."""

import math
import random

import pytest

from micqp.bench import (
    CONFIGS,
    CSV_COLUMNS,
    ProfileCurve,
    RunRecord,
    profile,
    read_records,
    run_one,
    run_suite,
    summarize,
    write_records,
)
from micqp.model import Status
from micqp.portfolio import gen_fball, gen_random_suite


def rec(instance, config, time_s, status=Status.OPTIMAL, objective=0.0):
    return RunRecord(instance=instance, config=config, status=status,
                     time_s=time_s, nodes=1, cuts=0, lp_solves=1,
                     conic_solves=0, objective=objective, max_violation=None)


def small_suite(count=2):
    return [(f"classical-5-{i}", inst)
            for i, inst in enumerate(gen_random_suite("classical", 5, count, 3))]


class TestRunSuite:
    def test_registry_names(self):
        assert list(CONFIGS) == ["OA", "LiftedLP-branch", "LiftedLP-cut",
                                 "SepLP", "TowerLP", "TowerSepLP"]

    def test_cross_product(self):
        records = run_suite(small_suite(), configs=["OA", "SepLP"],
                            time_limit=30.0)
        assert [(r.instance, r.config) for r in records] == [
            ("classical-5-0", "OA"), ("classical-5-0", "SepLP"),
            ("classical-5-1", "OA"), ("classical-5-1", "SepLP"),
        ]
        for r in records:
            assert r.status is Status.OPTIMAL
            assert r.time_s >= 0.0
            assert r.max_violation is not None

    def test_deterministic_counts(self):
        def key(records):
            return [(r.instance, r.config, r.status, r.nodes, r.cuts,
                     r.lp_solves, r.conic_solves, r.objective) for r in records]
        suite = small_suite(1)
        a = run_suite(suite, configs=["SepLP", "LiftedLP-cut"], time_limit=30.0)
        b = run_suite(suite, configs=["SepLP", "LiftedLP-cut"], time_limit=30.0)
        assert key(a) == key(b)

    def test_timeout_recorded(self):
        record = run_one("fball-10", gen_fball(10), "SepLP", time_limit=0.0)
        assert record.status is Status.TIME_LIMIT
        assert record.objective == -math.inf
        assert record.max_violation is None

    def test_dict_input_and_unknown_config(self):
        suite = dict(small_suite(1))
        records = run_suite(suite, configs=["OA"], time_limit=30.0)
        assert len(records) == 1
        with pytest.raises(KeyError):
            run_suite(suite, configs=["NoSuchConfig"])

    def test_failure_captured_as_status(self, monkeypatch):
        def boom(inst, limits):
            raise RuntimeError("synthetic failure")
        monkeypatch.setitem(CONFIGS, "OA", boom)
        records = run_suite(small_suite(1), configs=["OA", "SepLP"],
                            time_limit=30.0)
        assert records[0].status is Status.ITER_LIMIT
        assert records[1].status is Status.OPTIMAL  # suite kept going

    def test_threads_match_serial(self):
        suite = small_suite()
        serial = run_suite(suite, configs=["SepLP"], time_limit=30.0)
        parallel = run_suite(suite, configs=["SepLP"], time_limit=30.0,
                             threads=2)
        for a, b in zip(serial, parallel):
            assert (a.instance, a.config, a.status, a.nodes, a.cuts,
                    a.objective) == (b.instance, b.config, b.status, b.nodes,
                                     b.cuts, b.objective)

    def test_negative_time_rejected(self):
        with pytest.raises(ValueError):
            rec("i", "OA", -1.0)


class TestSummarize:
    def test_split_wins(self):
        records = [rec("i1", "OA", 1.0), rec("i1", "SepLP", 2.0),
                   rec("i2", "OA", 2.0), rec("i2", "SepLP", 1.0)]
        rows = {r.config: r for r in summarize(records)}
        assert rows["OA"].wins == 1 and rows["SepLP"].wins == 1
        assert rows["OA"].min_time == 1.0
        assert rows["OA"].avg_time == pytest.approx(1.5)
        assert rows["OA"].max_time == 2.0

    def test_one_percent_window(self):
        records = [rec("i1", "OA", 1.0), rec("i1", "SepLP", 1.005)]
        rows = {r.config: r for r in summarize(records)}
        assert rows["OA"].wins == 1 and rows["SepLP"].wins == 0
        assert rows["SepLP"].win_1pct == 1
        assert rows["SepLP"].win_10pct == 1

    def test_tie_goes_to_registry_order(self):
        records = [rec("i1", "SepLP", 1.0), rec("i1", "OA", 1.0)]
        rows = {r.config: r for r in summarize(records)}
        assert rows["OA"].wins == 1 and rows["SepLP"].wins == 0

    def test_single_config_wins_everything(self):
        records = [rec("i1", "OA", 1.0), rec("i2", "OA", 5.0)]
        (row,) = summarize(records)
        assert row.wins == 2 and row.n_records == 2

    def test_permutation_invariant(self):
        records = [rec(f"i{k}", cfg, 1.0 + 0.1 * k * (cfg == "OA"))
                   for k in range(5) for cfg in ("OA", "SepLP")]
        shuffled = records[:]
        random.Random(0).shuffle(shuffled)
        assert summarize(records) == summarize(shuffled)

    def test_solved_column_counts_conclusive(self):
        records = [rec("i1", "OA", 1.0),
                   rec("i2", "OA", 60.0, status=Status.TIME_LIMIT),
                   rec("i3", "OA", 1.0, status=Status.INFEASIBLE)]
        (row,) = summarize(records)
        assert row.solved == 2


class TestProfile:
    def test_two_config_ratios(self):
        records = [rec("i1", "OA", 1.0), rec("i1", "SepLP", 2.0)]
        curves = {c.config: dict(c.points) for c in profile(records)}
        assert curves["OA"][1.0] == 1.0
        assert curves["SepLP"][1.0] == 0.0
        assert curves["SepLP"][2.0] == 1.0

    def test_equal_times_jump_at_one(self):
        records = [rec("i1", "OA", 3.0), rec("i1", "SepLP", 3.0),
                   rec("i2", "OA", 1.0), rec("i2", "SepLP", 1.0)]
        for curve in profile(records):
            assert curve.points[0] == (1.0, 1.0)

    def test_timeouts_stay_at_zero(self):
        records = [rec("i1", "OA", 1.0),
                   rec("i1", "SepLP", 60.0, status=Status.TIME_LIMIT),
                   rec("i2", "OA", 1.0),
                   rec("i2", "SepLP", 60.0, status=Status.TIME_LIMIT)]
        curves = {c.config: c for c in profile(records)}
        assert all(rho == 0.0 for _, rho in curves["SepLP"].points)
        assert all(rho == 1.0 for _, rho in curves["OA"].points)

    def test_unsolved_instance_counts_in_denominator(self):
        records = [rec("i1", "OA", 1.0),
                   rec("i2", "OA", 60.0, status=Status.TIME_LIMIT)]
        (curve,) = profile(records)
        assert curve.points[-1][1] == 0.5

    def test_curves_monotone_with_valid_ratios(self):
        records = run_suite(small_suite(), configs=["OA", "SepLP"],
                            time_limit=30.0)
        for curve in profile(records):
            taus = [t for t, _ in curve.points]
            rhos = [p for _, p in curve.points]
            assert taus[0] >= 1.0 and taus == sorted(taus)
            assert rhos == sorted(rhos) and rhos[-1] <= 1.0


class TestCsv:
    def test_round_trip(self, tmp_path):
        records = [
            rec("i1", "OA", 1.25, objective=1.2399),
            rec("i2", "SepLP", 0.0, status=Status.INFEASIBLE,
                objective=-math.inf),
            RunRecord("i3", "TowerLP", Status.TIME_LIMIT, 60.0, 17, 4, 21, 2,
                      math.inf, 3.5e-9),
        ]
        path = tmp_path / "records.csv"
        write_records(records, path)
        assert read_records(path) == records
        header = path.read_text().splitlines()[0]
        assert header == ",".join(CSV_COLUMNS)

    def test_bad_header_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("instance,config\n")
        with pytest.raises(ValueError):
            read_records(path)

    def test_real_records_round_trip(self, tmp_path):
        records = run_suite(small_suite(1), configs=["OA", "TowerSepLP"],
                            time_limit=30.0)
        path = tmp_path / "records.csv"
        write_records(records, path)
        assert read_records(path) == records
