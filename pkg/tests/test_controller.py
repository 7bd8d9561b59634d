import numpy as np
import pytest

from sonfis import (
    Dataset,
    IterationRecord,
    NfisTrainConfig,
    RunTrace,
    SomConfig,
    SonfisArConfig,
    SonfisRConfig,
    apply_normalization,
    constant_mean_baseline,
    detect_balance,
    next_neuron_count,
    normalize,
    rmse,
    run_iteration,
    run_sonfis_ar,
    run_sonfis_r,
    split,
    trace_from_csv,
    trace_to_csv,
)

FAST_SOM = SomConfig(epochs=10)
FAST_NFIS = NfisTrainConfig(epochs=10)


def make_data(n=60, seed=0, constant=False):
    rng = np.random.default_rng(seed)
    X = rng.uniform(size=(n, 3))
    y = (np.full(n, 0.4) if constant
         else 0.2 + 0.5 * X[:, 0] + 0.2 * np.sin(4 * X[:, 1]))
    ds = Dataset(X, y)
    train, test = split(ds, int(n * 0.8), n - int(n * 0.8), seed=1)
    return train, test


def record(t, count, rmse_test=1.0, n_rules=2):
    n1, n2 = 1, count
    return IterationRecord(t, n1, n2, count, n_rules, rmse_test, rmse_test, seed_used=t)


class TestRmse:
    def test_zero_residual(self):
        assert rmse([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]) == 0.0

    def test_unit_residual(self):
        assert rmse([1.0, 1.0], [0.0, 0.0]) == 1.0

    def test_single_element(self):
        assert rmse([3.0], [0.0]) == 3.0

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            rmse([1.0], [1.0, 2.0])

    def test_empty(self):
        with pytest.raises(ValueError):
            rmse([], [])


class TestNextNeuronCount:
    def test_direct_substitution(self):
        got = next_neuron_count(20.0, 10.0, 1.01, 0.0001, 0.5)
        assert got == pytest.approx(20.701, abs=1e-12)

    def test_fixed_point_without_error_term(self):
        n = 17.0
        for _ in range(300):
            n = next_neuron_count(n, 123.0, 0.9, 0.0, 0.5)
        assert n == pytest.approx(5.0, abs=1e-9)  # gamma / (1 - alpha)

    def test_arithmetic_progression(self):
        n = 3.0
        for _ in range(5):
            n = next_neuron_count(n, 50.0, 1.0, 0.0, 1.0)
        assert n == 8.0


class TestRunIteration:
    def test_deterministic(self):
        train, test = make_data()
        a, rb_a = run_iteration(train, test, 2, 2, 2, seed=7,
                                som=FAST_SOM, nfis_cfg=FAST_NFIS)
        b, rb_b = run_iteration(train, test, 2, 2, 2, seed=7,
                                som=FAST_SOM, nfis_cfg=FAST_NFIS)
        assert a == b
        assert np.array_equal(rb_a.coeffs, rb_b.coeffs)

    def test_constant_decision_single_rule(self):
        train, test = make_data(constant=True)
        rec, _ = run_iteration(train, test, 2, 2, 1, seed=0,
                               som=FAST_SOM, nfis_cfg=FAST_NFIS)
        assert rec.rmse_test <= 1e-6

    def test_neuron_count_bookkeeping(self):
        train, test = make_data()
        for n1, n2 in ((1, 5), (2, 3), (3, 3)):
            rec, _ = run_iteration(train, test, n1, n2, 2, seed=1,
                                   som=FAST_SOM, nfis_cfg=FAST_NFIS)
            assert rec.neuron_count == n1 * n2

    def test_too_many_rules_marks_failure(self):
        train, test = make_data()
        rec, rb = run_iteration(train, test, 1, 2, 50, seed=1,
                                som=FAST_SOM, nfis_cfg=FAST_NFIS)
        assert rec.failed
        assert rb is None
        assert rec.rmse_test == float("inf")

    def test_denormalized_units_when_spec_given(self):
        rng = np.random.default_rng(3)
        ds = Dataset(rng.uniform(size=(60, 2)), rng.uniform(0, 100, 60))
        train_raw, test_raw = split(ds, 45, 15, seed=0)
        train, norm = normalize(train_raw)
        test = apply_normalization(test_raw, norm)
        rec_n, _ = run_iteration(train, test, 2, 2, 2, seed=5,
                                 som=FAST_SOM, nfis_cfg=FAST_NFIS)
        rec_d, _ = run_iteration(train, test, 2, 2, 2, seed=5, norm=norm,
                                 som=FAST_SOM, nfis_cfg=FAST_NFIS)
        scale = norm.decision_max - norm.decision_min
        assert rec_d.rmse_test == pytest.approx(rec_n.rmse_test * scale, rel=1e-9)


class TestRunSonfisR:
    def test_default_protocol_has_30_records(self):
        train, test = make_data()
        cfg = SonfisRConfig(seed=0, som=FAST_SOM, nfis=FAST_NFIS)
        trace, best = run_sonfis_r(cfg, train, test)
        assert len(trace.records) == 30
        assert [r.t for r in trace.records] == list(range(30))
        assert best is not None

    def test_single_iteration_protocol(self):
        train, test = make_data()
        cfg = SonfisRConfig(iterations_per_rule=1, rule_counts=(2,), seed=0,
                            som=FAST_SOM, nfis=FAST_NFIS)
        trace, _ = run_sonfis_r(cfg, train, test)
        assert len(trace.records) == 1

    def test_best_index_is_global_minimum(self):
        train, test = make_data()
        cfg = SonfisRConfig(iterations_per_rule=3, rule_counts=(2, 3), seed=1,
                            som=FAST_SOM, nfis=FAST_NFIS)
        trace, _ = run_sonfis_r(cfg, train, test)
        best = trace.records[trace.best_index].rmse_test
        assert all(best <= r.rmse_test for r in trace.records)

    def test_sampled_shapes_respect_range(self):
        train, test = make_data()
        cfg = SonfisRConfig(iterations_per_rule=5, rule_counts=(2,),
                            neuron_range=(6, 12), seed=3,
                            som=FAST_SOM, nfis=FAST_NFIS)
        trace, _ = run_sonfis_r(cfg, train, test)
        for r in trace.records:
            assert 6 <= r.neuron_count <= 12
            assert r.n1 <= r.n2

    def test_infeasible_range_rejected(self):
        cfg = SonfisRConfig(neuron_range=(3, 2))
        with pytest.raises(ValueError):
            run_sonfis_r(cfg, *make_data())

    def test_all_failed_returns_no_best(self):
        train, test = make_data()
        cfg = SonfisRConfig(iterations_per_rule=2, rule_counts=(50,),
                            neuron_range=(4, 6), seed=0,
                            som=FAST_SOM, nfis=FAST_NFIS)
        trace, best = run_sonfis_r(cfg, train, test)
        assert best is None
        assert trace.best_index is None
        assert all(r.failed for r in trace.records)

    def test_deterministic_trace(self):
        train, test = make_data()
        cfg = SonfisRConfig(iterations_per_rule=2, rule_counts=(2, 3), seed=4,
                            som=FAST_SOM, nfis=FAST_NFIS)
        a, _ = run_sonfis_r(cfg, train, test)
        b, _ = run_sonfis_r(cfg, train, test)
        assert a.records == b.records


class TestRunSonfisAr:
    def test_fixed_point_without_error_feedback(self):
        train, test = make_data()
        cfg = SonfisArConfig(alpha=0.9, beta=0.0, gamma=0.5, n_rules=2, n0=50,
                             max_iterations=50, seed=0,
                             som=FAST_SOM, nfis=FAST_NFIS)
        trace = run_sonfis_ar(cfg, train, test)
        assert trace.neuron_counts()[-1] == 5

    def test_beta_zero_real_sequence_decays_geometrically(self):
        train, test = make_data()
        cfg = SonfisArConfig(alpha=0.9, beta=0.0, gamma=0.5, n_rules=2, n0=50,
                             max_iterations=20, seed=0,
                             som=FAST_SOM, nfis=FAST_NFIS)
        trace = run_sonfis_ar(cfg, train, test)
        # reconstruct the real-valued sequence: beta=0 decouples it from data
        n, fixed = 50.0, 0.5 / (1 - 0.9)
        for rec in trace.records:
            n1, n2 = rec.n1, rec.n2
            assert (n1, n2) == (rec.n1, rec.n2)
            assert rec.neuron_count == max(1, int(np.floor(n + 0.5)))
            prev_gap = abs(n - fixed)
            n = next_neuron_count(n, 0.0, 0.9, 0.0, 0.5)
            assert abs(n - fixed) == pytest.approx(0.9 * prev_gap, rel=1e-12)

    def test_growth_regime_is_strictly_increasing_in_real_terms(self):
        train, test = make_data()
        cfg = SonfisArConfig(alpha=1.05, beta=1e-4, gamma=0.5, n_rules=2, n0=4,
                             max_iterations=15, seed=0,
                             som=FAST_SOM, nfis=FAST_NFIS)
        trace = run_sonfis_ar(cfg, train, test)
        counts = trace.neuron_counts()
        assert all(b >= a for a, b in zip(counts, counts[1:]))
        assert counts[-1] > counts[0]
        # reconstruct the real-valued sequence from the recorded errors
        n = 4.0
        for rec in trace.records:
            assert rec.neuron_count == max(1, int(np.floor(n + 0.5)))
            nxt = next_neuron_count(n, rec.rmse_test, 1.05, 1e-4, 0.5)
            assert nxt > n
            n = nxt

    def test_cap_terminates_run_early(self):
        train, test = make_data()
        cfg = SonfisArConfig(alpha=2.0, beta=0.0, gamma=5.0, n_rules=2, n0=4,
                             max_iterations=40, neuron_cap=20, seed=0,
                             som=FAST_SOM, nfis=FAST_NFIS)
        trace = run_sonfis_ar(cfg, train, test)
        assert len(trace.records) < 40
        assert max(trace.neuron_counts()) <= 20

    def test_failed_iteration_reuses_previous_error(self):
        train, test = make_data()
        # 2 neurons cannot support 4 rules -> early failures until growth
        cfg = SonfisArConfig(alpha=1.4, beta=0.0, gamma=1.0, n_rules=4, n0=2,
                             max_iterations=12, seed=0,
                             som=FAST_SOM, nfis=FAST_NFIS)
        trace = run_sonfis_ar(cfg, train, test)
        assert trace.records[0].failed
        assert not trace.records[-1].failed
        assert len(trace.records) == 12  # the loop stays total


class TestDetectBalance:
    def test_constant_trace(self):
        trace = RunTrace.from_records([record(t, 65) for t in range(60)])
        report = detect_balance(trace, window=10, tol=2)
        assert report.region == (0, 59, 65.0)

    def test_steep_ramp_has_no_region(self):
        trace = RunTrace.from_records([record(t, 5 * (t + 1)) for t in range(30)])
        report = detect_balance(trace, window=10, tol=2)
        assert report.region is None

    def test_durability_run_lengths(self):
        counts = [3, 3, 5, 5, 5]
        trace = RunTrace.from_records([record(t, c) for t, c in enumerate(counts)])
        report = detect_balance(trace, window=2, tol=0)
        assert report.durability == ((3, 2), (5, 3))

    def test_short_trace_rejected(self):
        trace = RunTrace.from_records([record(0, 5)])
        with pytest.raises(ValueError):
            detect_balance(trace, window=10, tol=2)

    def test_region_satisfies_definition_by_recheck(self):
        rng = np.random.default_rng(1)
        counts = [int(5 + 1.2 * t) for t in range(50)]
        counts += [65 + int(rng.integers(-1, 2)) for _ in range(50)]
        trace = RunTrace.from_records([record(t, c) for t, c in enumerate(counts)])
        report = detect_balance(trace, window=10, tol=2)
        start, end, mean = report.region
        seg = counts[start:end + 1]
        assert end - start + 1 >= 10
        assert mean == pytest.approx(sum(seg) / len(seg))
        assert all(abs(c - mean) <= 2 for c in seg)


class TestTraceCsv:
    def test_round_trip(self, tmp_path):
        records = [record(0, 4, 1.5), record(1, 6, float("inf")), record(2, 9, 0.75)]
        records[1] = IterationRecord(1, 2, 3, 6, 2, float("inf"), float("inf"), 1,
                                     failed=True)
        trace = RunTrace.from_records(records)
        p = tmp_path / "trace.csv"
        trace_to_csv(trace, p)
        back = trace_from_csv(p)
        assert back.records == trace.records
        assert back.best_index == trace.best_index == 2

    def test_header_checked(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("a,b\n1,2\n")
        with pytest.raises(ValueError):
            trace_from_csv(p)


def test_best_index_takes_first_of_tied_minima():
    records = [record(0, 4, 2.0), record(1, 5, 1.25), record(2, 6, 1.25)]
    assert RunTrace.from_records(records).best_index == 1


def test_constant_mean_baseline_matches_direct_formula():
    rng = np.random.default_rng(2)
    ds = Dataset(rng.uniform(size=(40, 2)), rng.uniform(0, 100, 40))
    train_raw, test_raw = split(ds, 30, 10, seed=0)
    train, norm = normalize(train_raw)
    test = apply_normalization(test_raw, norm)
    base = constant_mean_baseline(train, test, norm)
    want = rmse(np.full(10, train_raw.y.mean()), test_raw.y)
    assert base == pytest.approx(want, rel=1e-12)


def test_iteration_record_validates_neuron_count():
    with pytest.raises(ValueError):
        IterationRecord(0, 2, 3, 7, 2, 1.0, 1.0, 0)
