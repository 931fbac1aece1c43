"""Profiling tests: first-error statistics, critical sets, LLR stats, sweeps."""

import numpy as np
import pytest

from polarflip.code import construct_code
from polarflip.flip import CriticalSet
from polarflip.profiler import (InsufficientDataError, derive_critical_set,
                                llr_statistics, profile_e1, sweep_threshold,
                                sweep_tmax)


@pytest.fixture(scope="module")
def code64():
    return construct_code(64, 32, 7, 2.5)


PAPER_EXAMPLE = {3: 0.25, 4: 0.40, 5: 0.20, 6: 0.13, 7: 0.02}


def example_vector(n=8):
    f = np.zeros(n)
    for i, v in PAPER_EXAMPLE.items():
        f[i] = v
    return f


class TestDeriveCriticalSet:
    def test_worked_example_full_gamma(self):
        cs = derive_critical_set(example_vector(), gamma=0.9999)
        # top four reach only 0.98, so all five indices are needed
        assert sorted(cs.indices) == [3, 4, 5, 6, 7]
        assert list(cs.indices[:2]) == [4, 3]

    def test_worked_example_half_gamma(self):
        cs = derive_critical_set(example_vector(), gamma=0.5)
        assert list(cs.indices) == [4, 3]

    def test_uniform_gamma_one(self):
        f = np.zeros(16)
        f[4:12] = 1 / 8
        cs = derive_critical_set(f, gamma=1.0)
        assert sorted(cs.indices) == list(range(4, 12))

    def test_minimality(self):
        cs = derive_critical_set(example_vector(), gamma=0.9999)
        assert cs.coverage >= 0.9999
        assert cs.coverage - cs.frequencies[-1] < 0.9999

    def test_tie_break_ascending_index(self):
        f = np.zeros(8)
        f[[2, 5, 6]] = [0.5, 0.25, 0.25]
        cs = derive_critical_set(f, gamma=0.7)
        assert list(cs.indices) == [2, 5]

    def test_invalid_gamma(self):
        with pytest.raises(ValueError):
            derive_critical_set(example_vector(), gamma=1.01)
        with pytest.raises(ValueError):
            derive_critical_set(example_vector(), gamma=0.0)

    def test_unnormalized_rejected(self):
        with pytest.raises(ValueError):
            derive_critical_set(example_vector() * 0.5, gamma=0.5)


class TestProfileE1:
    def test_sums_to_one_and_nonnegative(self, code64):
        prof = profile_e1(code64, 2.0, min_events=300, max_frames=200_000,
                          seed=3)
        assert prof.n_failures >= 300
        assert abs(prof.f_e1.sum() - 1.0) < 1e-12
        assert (prof.f_e1 >= 0).all()
        assert not prof.f_e1[code64.frozen_mask].any()

    def test_error_count_histogram_consistent(self, code64):
        prof = profile_e1(code64, 2.0, min_events=300, max_frames=200_000,
                          seed=3)
        assert prof.error_count_hist[0] == 0
        assert prof.error_count_hist.sum() == prof.n_failures
        assert 0.0 < prof.single_error_fraction <= 1.0

    def test_noiseless_insufficient_data(self, code64):
        with pytest.raises(InsufficientDataError):
            profile_e1(code64, 40.0, min_events=10, max_frames=2000, seed=1)

    def test_deterministic(self, code64):
        a = profile_e1(code64, 2.0, min_events=100, max_frames=50_000, seed=9)
        b = profile_e1(code64, 2.0, min_events=100, max_frames=50_000, seed=9)
        assert np.array_equal(a.f_e1, b.f_e1)
        assert a.n_frames == b.n_frames

    def test_csv_emission(self, tmp_path, code64):
        prof = profile_e1(code64, 2.0, min_events=100, max_frames=50_000,
                          seed=9)
        path = tmp_path / "e1.csv"
        prof.save_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0].startswith("#")
        assert lines[1] == "index,freq"
        assert len(lines) == 2 + np.count_nonzero(prof.f_e1)


class TestLlrStatistics:
    def test_means_split_by_error_status(self, code64):
        prof = profile_e1(code64, 2.0, min_events=500, max_frames=300_000,
                          seed=5)
        cs = derive_critical_set(prof.f_e1, 0.9999, source_ebn0=2.0)
        stats = llr_statistics(code64, 2.0, cs, frame_budget=40_000, seed=5)
        populated = (stats.e1_count >= 50) & (stats.ok_count >= 50)
        assert populated.any()
        assert (stats.e1_mean[populated] < stats.ok_mean[populated]).all()

    def test_underpopulated_flagged_not_fabricated(self, code64):
        cs = CriticalSet.all_non_frozen(code64)
        stats = llr_statistics(code64, 6.0, cs, frame_budget=500, seed=6)
        assert len(stats.underpopulated)
        missing = np.isin(stats.indices, stats.underpopulated)
        assert np.isnan(stats.e1_mean[missing]).all()

    def test_gap_positive(self, code64):
        prof = profile_e1(code64, 2.0, min_events=500, max_frames=300_000,
                          seed=5)
        cs = derive_critical_set(prof.f_e1, 0.9999, source_ebn0=2.0)
        stats = llr_statistics(code64, 2.0, cs, frame_budget=40_000, seed=5)
        assert stats.overall_gap(min_samples=20) > 0


class TestSweeps:
    def test_omega_zero_column_is_plain_sc(self, code64):
        prof = profile_e1(code64, 2.0, min_events=400, max_frames=300_000,
                          seed=7)
        cs = derive_critical_set(prof.f_e1, 0.9999, source_ebn0=2.0)
        sw = sweep_threshold(code64, cs, [2.0], [0.0, 4.0, 8.0], t_max=8,
                             frame_budget=20_000, seed=8)
        # the zero-threshold column never flips: it is the SC error pattern,
        # and thresholded columns can only fix CRC-failing frames
        assert sw.fer[0, 0] >= sw.fer[0, 1] >= 0
        assert sw.frames[0] == 20_000

    def test_omega_sweep_csv(self, tmp_path, code64):
        cs = CriticalSet.all_non_frozen(code64)
        sw = sweep_threshold(code64, cs, [2.0], [0.0, 5.0], t_max=4,
                             frame_budget=2000, seed=8)
        path = tmp_path / "omega.csv"
        sw.save_csv(path)
        lines = path.read_text().splitlines()
        assert lines[1] == "ebn0,omega,frames,frame_errors,fer"
        assert len(lines) == 4

    def test_tmax_sweep_monotone_and_nested(self, code64):
        prof = profile_e1(code64, 2.0, min_events=400, max_frames=300_000,
                          seed=7)
        cs = derive_critical_set(prof.f_e1, 0.9999, source_ebn0=2.0)
        sw = sweep_tmax(code64, cs, omega=6.0, ebn0=2.0,
                        t_max_grid=[1, 2, 5, 10], frame_budget=20_000, seed=9)
        for curve in sw.fer.values():
            assert np.all(np.diff(curve) <= 0)
        # identical budgets start from the same SC error pattern
        assert sw.fer["scflip"][0] == sw.fer["tscf"][0]
