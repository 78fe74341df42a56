"""Prediction distances: Schur-complement oracle, symmetric reduction, closed forms."""

from __future__ import annotations

import math

import numpy as np
import pytest

from bssp.circle import SpectralMeasure, TrigDensity, TrigPoly
from bssp.criterion import build_cn
from bssp.kernels import HermitianMatrix, HpdSequence, alpha_from_measure
from bssp.predict import (
    finite_distance,
    predict_tq,
    predict_tq1,
    spectral_toeplitz,
    symmetric_reduction,
)
from conftest import random_measure

INV_SQRT2 = 1 / math.sqrt(2)


class TestFiniteDistance:
    def test_identity(self):
        assert finite_distance(HermitianMatrix(np.eye(4)), 2) == pytest.approx(1.0)

    def test_all_ones_target_in_span(self):
        assert finite_distance(HermitianMatrix(np.ones((3, 3))), 0) == pytest.approx(0.0, abs=1e-7)

    def test_depth_one_extremal_kernel(self):
        mat = HermitianMatrix(
            np.array([[1, INV_SQRT2, INV_SQRT2], [INV_SQRT2, 1, 0], [INV_SQRT2, 0, 1]])
        )
        # v = (1/sqrt2, 1/sqrt2), B = I: d^2 = 1 - 1 = 0 (sqrt near 0 keeps
        # only half the float digits)
        assert finite_distance(mat, 0) == pytest.approx(0.0, abs=1e-7)

    def test_rejects_indefinite(self):
        bad = HermitianMatrix(np.array([[1.0, 0.8, 0.8], [0.8, 1, 0], [0.8, 0, 1]]))
        with pytest.raises(ValueError, match="PSD"):
            finite_distance(bad, 0)

    def test_two_by_two_closed_form(self, rng):
        for _ in range(10):
            c = float(rng.uniform(-0.9, 0.9))
            mat = HermitianMatrix(np.array([[1.0, c], [c, 1.0]]))
            assert finite_distance(mat, 0) == pytest.approx(math.sqrt(1 - c * c), rel=1e-10)

    def test_single_coordinate(self):
        # empty span: the distance is the standard deviation itself
        assert finite_distance(HermitianMatrix(np.array([[4.0]])), 0) == pytest.approx(2.0)


class TestSymmetricReduction:
    def test_white_noise_distance_one(self):
        alpha = HpdSequence.white_noise(2, 8)
        for n in (1, 3, 8):
            assert symmetric_reduction(alpha, n) == pytest.approx(1.0)

    def test_extremal_zero_at_order_one(self):
        assert symmetric_reduction(HpdSequence.geometric(2, 4), 1) == pytest.approx(0.0, abs=1e-8)

    def test_boundary_density_approaches_szego_value(self):
        # nu = (1 + cos) dm: Toeplitz prediction errors (n+2)/(2(n+1)) -> 1/2
        mu = SpectralMeasure.from_density(TrigDensity(TrigPoly.from_dict({-1: 0.5, 0: 1, 1: 0.5})))
        alpha = alpha_from_measure(mu, 2, 80)
        val = symmetric_reduction(alpha, 64)
        assert val == pytest.approx(math.sqrt((64 + 2) / (2 * (64 + 1))), abs=1e-8)
        assert abs(val - math.sqrt(0.5)) < 0.01

    def test_equals_tree_oracle(self, rng):
        # permutation-symmetry equality, the exact statement behind the fast path
        for k in range(12):
            q = 2 if k % 2 == 0 else 3
            mu = random_measure(rng)
            alpha = alpha_from_measure(mu, q, 6)
            for depth in (1, 2, 3, 4):
                rep = predict_tq(
                    alpha, mu, depths=(depth,), method="tree"
                )
                assert symmetric_reduction(alpha, depth) == pytest.approx(
                    rep.oracle_values[0], abs=1e-8
                )


class TestPredictTq:
    def test_white_noise(self):
        alpha = HpdSequence.white_noise(2, 8)
        rep = predict_tq(alpha, SpectralMeasure.lebesgue(), depths=(1, 2, 3, 4))
        assert rep.szego_value == pytest.approx(1.0)
        assert all(v == pytest.approx(1.0) for v in rep.oracle_values)
        assert rep.converged

    def test_extremal_sequence(self):
        alpha = HpdSequence.geometric(2, 8)
        rep = predict_tq(alpha, SpectralMeasure.point_mass(), depths=(1, 2, 4))
        assert rep.szego_value == 0.0
        assert rep.oracle_values[0] == pytest.approx(0.0, abs=1e-7)
        assert rep.converged

    def test_boundary_density_szego_one(self):
        mu = SpectralMeasure.from_density(TrigDensity(TrigPoly.from_dict({-1: 1, 0: 2, 1: 1})))
        alpha = alpha_from_measure(mu, 2, 10)
        rep = predict_tq(alpha, mu, depths=(1, 2, 4, 8))
        assert rep.szego_value == pytest.approx(1.0, abs=1e-9)
        assert rep.decreasing
        assert rep.gap >= -1e-9

    def test_oracle_monotone_and_above_szego(self, rng):
        for _ in range(8):
            mu = random_measure(rng, allow_atoms=False)
            alpha = alpha_from_measure(mu, 2, 12)
            rep = predict_tq(alpha, mu, depths=(1, 2, 3, 4, 6, 8))
            for a, b in zip(rep.oracle_values, rep.oracle_values[1:]):
                assert b <= a + 1e-10
            assert rep.szego_value <= rep.oracle_values[-1] + 1e-8

    def test_requires_measure(self):
        with pytest.raises(ValueError, match="measure"):
            predict_tq(HpdSequence.geometric(2, 8), None)

    def test_rejects_inconsistent_measure(self):
        with pytest.raises(ValueError, match="inconsistent"):
            predict_tq(HpdSequence.geometric(2, 8), SpectralMeasure.lebesgue())


class TestPredictStarTree:
    def test_lebesgue_any_arity_gives_one(self):
        for q in (2, 3, 5):
            rep = predict_tq1(SpectralMeasure.lebesgue(), q)
            assert rep.valid
            assert rep.value == pytest.approx(1.0, abs=1e-12)

    def test_boundary_density_gives_zero(self):
        mu = SpectralMeasure.from_density(TrigDensity(TrigPoly.from_dict({-1: 1, 0: 2, 1: 1})))
        rep = predict_tq1(mu, 2)
        assert rep.valid
        assert rep.value == pytest.approx(0.0, abs=1e-3)

    def test_atom_contributes_mass_not_mean(self):
        mu = SpectralMeasure(((0.0, 0.1),), TrigDensity(TrigPoly.constant(1.0)))
        rep = predict_tq1(mu, 2)
        assert rep.valid
        assert rep.value == pytest.approx(math.sqrt(0.9), rel=1e-12)

    def test_invalid_when_criterion_fails(self):
        rep = predict_tq1(SpectralMeasure.point_mass(), 2)
        assert not rep.valid and rep.value is None

    def test_matches_block_matrix_oracle_for_lebesgue(self):
        # orthogonal-branch decomposition computed directly on the star kernel
        for q in (2, 3):
            mat = build_cn(SpectralMeasure.lebesgue(), q, 64)
            direct = finite_distance(mat, 0)
            rep = predict_tq1(SpectralMeasure.lebesgue(), q)
            assert direct == pytest.approx(rep.value, abs=1e-6)

    def test_matches_block_matrix_oracle_random(self, rng):
        # star-tree prediction at finite order decreases to the closed form
        for _ in range(5):
            mu = random_measure(rng, allow_atoms=False)
            rep = predict_tq1(mu, 2)
            if not rep.valid:
                continue
            direct = finite_distance(build_cn(mu, 2, 48), 0)
            assert direct >= rep.value - 1e-8
            assert direct - rep.value < 0.2


class TestSpectralToeplitz:
    def test_entries(self):
        alpha = HpdSequence.geometric(2, 4)
        mat = spectral_toeplitz(alpha, 3)
        assert np.allclose(mat.data, np.ones((4, 4)))
