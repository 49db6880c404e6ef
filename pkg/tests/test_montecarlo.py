"""Finite-size matrices, empirical spectra, and exact enumeration MI."""

import math

import numpy as np
import pytest

from spreadmi import (EnumerationLimitError, SpreadingMatrix, binary_prior,
                      empirical_spectrum, exact_mutual_information,
                      gaussian_exact_mi, gaussian_prior, gen_iid_spreading,
                      gen_wbe_spreading, ks_distance, make_mp_law, make_wbe_law,
                      mutual_information, read_matrix,
                      scalar_mutual_information, write_matrix, SystemSpec)


def unit_matrix():
    return SpreadingMatrix(entries=np.array([[1.0]]), kind="iid")


class TestIidGeneration:
    def test_column_norms(self):
        s = gen_iid_spreading(0, 4, 2)
        norms = np.sqrt((s.entries ** 2).sum(axis=0))
        np.testing.assert_allclose(norms, 1.0, atol=1e-12)
        assert s.entries.shape == (2, 4)

    def test_deterministic(self):
        a = gen_iid_spreading(5, 16, 8)
        b = gen_iid_spreading(5, 16, 8)
        assert np.array_equal(a.entries, b.entries)
        c = gen_iid_spreading(6, 16, 8)
        assert not np.array_equal(a.entries, c.entries)

    def test_trace_identity(self):
        s = gen_iid_spreading(1, 64, 32)
        assert (s.entries ** 2).sum() == pytest.approx(64.0, abs=1e-8)

    def test_spectrum_close_to_mp(self):
        s = gen_iid_spreading(0, 512, 256)
        _, ks = empirical_spectrum(s, make_mp_law(2.0))
        assert ks <= 0.05

    def test_sanity_separation_from_wbe_reference(self):
        s = gen_iid_spreading(0, 512, 256)
        _, ks_mp = empirical_spectrum(s, make_mp_law(2.0))
        _, ks_wbe = empirical_spectrum(s, make_wbe_law(2.0))
        assert ks_wbe > 5.0 * ks_mp


class TestWbeGeneration:
    def test_defining_properties_small(self):
        s = gen_wbe_spreading(0, 3, 2)
        norms = np.sqrt((s.entries ** 2).sum(axis=0))
        np.testing.assert_allclose(norms, 1.0, atol=1e-10)
        np.testing.assert_allclose(s.entries @ s.entries.T, 1.5 * np.eye(2),
                                   atol=1e-12)

    def test_exact_two_point_spectrum(self):
        s = gen_wbe_spreading(2, 6, 4)
        eigs, ks = empirical_spectrum(s, make_wbe_law(1.5))
        np.testing.assert_allclose(np.sort(eigs)[:2], 0.0, atol=1e-10)
        np.testing.assert_allclose(np.sort(eigs)[2:], 1.5, atol=1e-10)
        assert ks <= 1e-9

    def test_trace_identity_many_seeds(self):
        for seed in range(10):
            s = gen_wbe_spreading(seed, 64, 32)
            assert (s.entries ** 2).sum() == pytest.approx(64.0, abs=1e-8)

    def test_deterministic(self):
        a = gen_wbe_spreading(9, 12, 8)
        b = gen_wbe_spreading(9, 12, 8)
        assert np.array_equal(a.entries, b.entries)

    def test_rejects_underloaded_shapes(self):
        with pytest.raises(ValueError):
            gen_wbe_spreading(0, 4, 4)
        with pytest.raises(ValueError):
            gen_wbe_spreading(0, 3, 5)

    def test_validation_catches_bad_matrices(self):
        with pytest.raises(ValueError, match="unit norm"):
            SpreadingMatrix(entries=2.0 * np.eye(2), kind="iid")
        with pytest.raises(ValueError, match="beta I"):
            bad = gen_iid_spreading(0, 6, 4).entries
            SpreadingMatrix(entries=bad, kind="wbe")


class TestKsDistance:
    def test_exact_atoms(self):
        samples = np.array([0.0, 0.0, 1.5, 1.5, 1.5, 1.5])
        assert ks_distance(samples, make_wbe_law(1.5)) <= 1e-12

    def test_detects_wrong_weights(self):
        samples = np.array([0.0, 1.5, 1.5, 1.5, 1.5, 1.5])
        assert ks_distance(samples, make_wbe_law(1.5)) == pytest.approx(1 / 6)

    def test_snaps_eigensolver_noise(self):
        samples = np.array([-1e-13, 1e-14, 1.5 + 1e-13, 1.5, 1.5, 1.5 - 1e-13])
        assert ks_distance(samples, make_wbe_law(1.5)) <= 1e-12


class TestGaussianExactMi:
    def test_wbe_closed_form(self):
        s = gen_wbe_spreading(1, 6, 4)
        assert gaussian_exact_mi(s, 0.5) == pytest.approx(math.log(4.0) / 3.0,
                                                          abs=1e-10)

    def test_vanishes_in_heavy_noise(self):
        s = gen_wbe_spreading(1, 6, 4)
        assert gaussian_exact_mi(s, 1e9) == pytest.approx(0.0, abs=1e-8)

    def test_iid_close_to_asymptotic_value(self):
        s = gen_iid_spreading(4, 512, 256)
        finite = gaussian_exact_mi(s, 0.5)
        limit = mutual_information(SystemSpec(
            prior=gaussian_prior(), spectrum=make_mp_law(2.0),
            noise_var=0.5)).mutual_information
        assert abs(finite - limit) / limit < 0.02


class TestExactMutualInformation:
    def test_single_user_matches_scalar_channel(self):
        est = exact_mutual_information(unit_matrix(), binary_prior(), 1.0,
                                       20_000, 11)
        oracle = scalar_mutual_information(binary_prior(), 1.0)
        assert abs(est.value - oracle) <= 3.0 * est.std_error

    def test_vanishes_in_heavy_noise(self):
        est = exact_mutual_information(unit_matrix(), binary_prior(), 1e6,
                                       5_000, 1)
        assert abs(est.value) <= max(3.0 * est.std_error, 1e-5)

    def test_deterministic_per_seed(self):
        s = gen_wbe_spreading(0, 6, 4)
        a = exact_mutual_information(s, binary_prior(), 0.5, 4_000, 7)
        b = exact_mutual_information(s, binary_prior(), 0.5, 4_000, 7)
        assert a == b
        c = exact_mutual_information(s, binary_prior(), 0.5, 4_000, 8)
        assert a.value != c.value

    def test_user_exchangeability(self):
        s = gen_wbe_spreading(3, 6, 4)
        perm = np.random.default_rng(0).permutation(6)
        s_perm = SpreadingMatrix(entries=s.entries[:, perm], kind="wbe")
        a = exact_mutual_information(s, binary_prior(), 0.5, 30_000, 5)
        b = exact_mutual_information(s_perm, binary_prior(), 0.5, 30_000, 5)
        se = math.hypot(a.std_error, b.std_error)
        assert abs(a.value - b.value) <= 3.0 * se

    def test_monotone_in_noise_within_error(self):
        s = gen_wbe_spreading(2, 6, 4)
        grid = [0.25, 0.5, 1.0, 2.0]
        ests = [exact_mutual_information(s, binary_prior(), s2, 20_000, 3)
                for s2 in grid]
        for lo, hi in zip(ests[1:], ests[:-1]):
            slack = 3.0 * math.hypot(lo.std_error, hi.std_error)
            assert hi.value >= lo.value - slack

    def test_enumeration_limit(self):
        s = gen_iid_spreading(0, 21, 8)
        with pytest.raises(EnumerationLimitError):
            exact_mutual_information(s, binary_prior(), 0.5, 1_000, 0)

    def test_rejects_gaussian_prior_and_tiny_runs(self):
        s = gen_wbe_spreading(0, 3, 2)
        with pytest.raises(ValueError, match="discrete"):
            exact_mutual_information(s, gaussian_prior(), 0.5, 2_000, 0)
        with pytest.raises(ValueError, match="1000"):
            exact_mutual_information(s, binary_prior(), 0.5, 500, 0)

    def test_estimate_within_prior_entropy(self):
        s = gen_wbe_spreading(1, 6, 4)
        est = exact_mutual_information(s, binary_prior(), 0.1, 10_000, 2)
        assert -3 * est.std_error <= est.value <= math.log(2) + 3 * est.std_error


class TestMatrixDump:
    def test_round_trip_bit_exact(self, tmp_path):
        s = gen_wbe_spreading(5, 12, 8)
        path = tmp_path / "matrix.txt"
        write_matrix(path, s)
        back = read_matrix(path)
        assert np.array_equal(back.entries, s.entries)
        assert back.kind == "wbe" and back.seed == 5

    def test_header_format(self, tmp_path):
        s = gen_iid_spreading(3, 4, 2)
        path = tmp_path / "matrix.txt"
        write_matrix(path, s)
        header = path.read_text().splitlines()[0]
        assert header == "# K=4 L=2 kind=iid seed=3"
