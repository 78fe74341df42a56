"""Branching-Toeplitz kernels, PSD testing, classification, Markov product."""

from __future__ import annotations

import math

import numpy as np
import pytest

from bssp.circle import SpectralMeasure, TrigDensity, TrigPoly
from bssp.kernels import (
    HermitianMatrix,
    HpdSequence,
    alpha_from_measure,
    branching_toeplitz,
    cantor_gram,
    hpd_check,
    markov_product,
    matrix_from_json,
    matrix_to_csv,
    matrix_to_json,
    modulate,
    psd_check,
    toeplitz_matrix,
)
from bssp.trees import truncate
from conftest import random_measure

INV_SQRT2 = 1 / math.sqrt(2)


def make_failing_alpha(rng, q: int, max_order: int = 8):
    """Random sequence whose spectral Toeplitz matrix fails by max_order.

    Returns (alpha, failing_order).  Decay-violating sequences are also
    produced (they fail the 2x2 minor at the violating lag).
    """
    while True:
        if rng.uniform() < 0.4:
            # decay violation with a healthy margin at a random lag
            n_star = int(rng.integers(1, 5))
            vals = np.zeros(9, dtype=complex)
            vals[0] = 1.0
            vals[n_star] = 1.3 * q ** (-n_star / 2.0)
            alpha = HpdSequence(q, vals)
            return alpha, n_star + 1
        coeffs = rng.normal(size=9) + 1j * rng.normal(size=9)
        coeffs *= 0.9 / np.maximum(np.abs(coeffs), 1e-9)
        coeffs[0] = 1.0
        alpha = HpdSequence(q, coeffs * q ** (-np.arange(9) / 2.0))
        for order in range(2, max_order + 1):
            res = psd_check(toeplitz_matrix(alpha, order))
            if res.min_eigenvalue < -0.01:
                return alpha, order


class TestBranchingToeplitz:
    def test_depth_one_block(self):
        a = HpdSequence.geometric(2, 4)
        mat = branching_toeplitz(a, truncate(2, 1))
        expected = np.array(
            [[1, INV_SQRT2, INV_SQRT2], [INV_SQRT2, 1, 0], [INV_SQRT2, 0, 1]]
        )
        assert np.allclose(mat.data.real, expected, atol=1e-15)
        assert np.all(mat.data.imag == 0)

    def test_white_noise_identity(self):
        a = HpdSequence.white_noise(3, 5)
        mat = branching_toeplitz(a, truncate(3, 3))
        assert np.allclose(mat.data, np.eye(mat.size))

    def test_depth_two_matches_cantor_gram(self):
        a = HpdSequence.geometric(2, 4)
        mat = branching_toeplitz(a, truncate(2, 2))
        gram = cantor_gram(2, 2).gram
        assert np.max(np.abs(mat.data - gram.data)) < 1e-12

    def test_arity_mismatch_rejected(self):
        with pytest.raises(ValueError, match="arity"):
            branching_toeplitz(HpdSequence.geometric(2, 4), truncate(3, 2))

    def test_depth_beyond_alpha_rejected(self):
        with pytest.raises(ValueError, match="alpha"):
            branching_toeplitz(HpdSequence.geometric(2, 2), truncate(2, 3))

    def test_hermitian_exact_for_complex_alpha(self, rng):
        mu = random_measure(rng)
        alpha = alpha_from_measure(mu, 2, 6)
        mat = branching_toeplitz(alpha, truncate(2, 4))
        assert np.max(np.abs(mat.data - mat.data.conj().T)) < 1e-12


class TestPsdCheck:
    def test_identity(self):
        res = psd_check(HermitianMatrix(np.eye(4)))
        assert res.psd and res.min_eigenvalue == pytest.approx(1.0)

    def test_known_indefinite_three_by_three(self):
        # eigenvalues {1, 1 +- 0.8 sqrt 2} from the characteristic polynomial
        mat = HermitianMatrix(np.array([[1, 0.8, 0.8], [0.8, 1, 0], [0.8, 0, 1]]))
        res = psd_check(mat)
        assert not res.psd
        assert res.min_eigenvalue == pytest.approx(1 - 0.8 * math.sqrt(2), abs=1e-12)

    def test_boundary_projection_kernel(self):
        a = HpdSequence.geometric(2, 2)
        res = psd_check(branching_toeplitz(a, truncate(2, 1)))
        assert res.psd
        assert res.min_eigenvalue == pytest.approx(0.0, abs=1e-12)

    def test_rejects_non_hermitian(self):
        with pytest.raises(ValueError, match="Hermitian"):
            HermitianMatrix(np.array([[1.0, 2.0], [0.0, 1.0]]))


class TestMarkovProduct:
    def _edge(self, c, labels):
        return HermitianMatrix(np.array([[1, c], [np.conj(c), 1]]), labels)

    def test_cross_entry_and_psd(self):
        k1 = self._edge(INV_SQRT2, ("x0", "a"))
        k2 = self._edge(INV_SQRT2, ("x0", "b"))
        out = markov_product(k1, k2, "x0")
        i, j = out.labels.index("a"), out.labels.index("b")
        assert out.data[i, j] == pytest.approx(0.5)
        assert psd_check(out).psd

    def test_singleton_identity(self):
        k1 = self._edge(0.3, ("x0", "a"))
        k2 = HermitianMatrix(np.array([[1.0]]), ("x0",))
        out = markov_product(k1, k2, "x0")
        assert out.labels == ("x0", "a")
        assert np.allclose(out.data, k1.data)

    def test_rank_one_all_ones(self):
        out = markov_product(self._edge(1.0, ("x0", "a")), self._edge(1.0, ("x0", "b")), "x0")
        assert np.allclose(out.data, np.ones((3, 3)))
        assert psd_check(out).psd

    def test_restrictions_agree(self, rng):
        k1 = self._edge(0.4 + 0.2j, ("x0", "a"))
        k2 = self._edge(-0.1 + 0.6j, ("x0", "b"))
        out = markov_product(k1, k2, "x0")
        m = {lab: i for i, lab in enumerate(out.labels)}
        assert out.data[m["x0"], m["a"]] == pytest.approx(k1.data[0, 1])
        assert out.data[m["x0"], m["b"]] == pytest.approx(k2.data[0, 1])

    def test_missing_shared_label(self):
        with pytest.raises(ValueError, match="intersect"):
            markov_product(self._edge(0.5, ("x", "a")), self._edge(0.5, ("y", "b")), "x")

    def test_non_unit_diagonal_rejected(self):
        k1 = HermitianMatrix(np.array([[2.0, 0.5], [0.5, 1.0]]), ("x0", "a"))
        k2 = self._edge(0.5, ("x0", "b"))
        with pytest.raises(ValueError, match="diagonal"):
            markov_product(k1, k2, "x0")

    def test_iterated_gluing_reconstructs_extremal_kernel(self):
        # glue the elementary root-plus-children blocks along shared vertices:
        # the product reproduces the depth-2 extremal kernel entry for entry
        q = 2
        c = q**-0.5

        def block(w: str):
            labels = (w,) + tuple(f"{w}{i}".lstrip("e") or str(i) for i in range(1, q + 1))
            data = np.eye(q + 1)
            data[0, 1:] = c
            data[1:, 0] = c
            return HermitianMatrix(data, labels)

        glued = block("e")
        for w in ("1", "2"):
            glued = markov_product(glued, block(w), w)
        reference = branching_toeplitz(HpdSequence.geometric(q, 2), truncate(q, 2))
        assert glued.labels == reference.labels
        assert np.max(np.abs(glued.data - reference.data)) < 1e-15

    def test_preserves_psd_random_unit_diagonal(self, rng):
        # random PSD kernels with unit diagonal sharing one point
        for _ in range(25):
            n1, n2 = int(rng.integers(2, 7)), int(rng.integers(2, 7))
            b1 = rng.normal(size=(n1, n1)) + 1j * rng.normal(size=(n1, n1))
            b2 = rng.normal(size=(n2, n2)) + 1j * rng.normal(size=(n2, n2))
            g1, g2 = b1 @ b1.conj().T, b2 @ b2.conj().T
            d1 = np.sqrt(np.real(np.diag(g1)))
            d2 = np.sqrt(np.real(np.diag(g2)))
            g1 = g1 / np.outer(d1, d1)
            g2 = g2 / np.outer(d2, d2)
            np.fill_diagonal(g1, 1.0)
            np.fill_diagonal(g2, 1.0)
            g1 = (g1 + g1.conj().T) / 2
            g2 = (g2 + g2.conj().T) / 2
            k1 = HermitianMatrix(g1, tuple(["x0"] + [f"a{i}" for i in range(n1 - 1)]))
            k2 = HermitianMatrix(g2, tuple(["x0"] + [f"b{i}" for i in range(n2 - 1)]))
            assert psd_check(markov_product(k1, k2, "x0")).psd


class TestCantorGram:
    def test_single_vertex(self):
        cg = cantor_gram(2, 0)
        assert cg.gram.data.shape == (1, 1)
        assert cg.gram.data[0, 0] == pytest.approx(1.0)

    def test_depth_one_inner_products(self):
        cg = cantor_gram(2, 1)
        expected = np.array(
            [[1, INV_SQRT2, INV_SQRT2], [INV_SQRT2, 1, 0], [INV_SQRT2, 0, 1]]
        )
        assert np.allclose(cg.gram.data, expected)

    def test_depth_two_entries(self):
        cg = cantor_gram(2, 2)
        labels = cg.gram.labels
        i_root = labels.index("e")
        i_12 = labels.index("12")
        i_1 = labels.index("1")
        i_21 = labels.index("21")
        assert cg.gram.data[i_root, i_12] == pytest.approx(0.5)
        assert cg.gram.data[i_1, i_21] == pytest.approx(0.0)

    @pytest.mark.parametrize("q", [2, 3])
    def test_matches_kernel_up_to_depth_five(self, q):
        for depth in range(0, 6):
            cg = cantor_gram(q, depth)
            mat = branching_toeplitz(HpdSequence.geometric(q, depth + 1), truncate(q, depth))
            assert np.max(np.abs(cg.gram.data - mat.data)) < 1e-12

    def test_cap(self):
        with pytest.raises(ValueError, match="cap"):
            cantor_gram(2, 25)


class TestAlphaFromMeasure:
    def test_unit_atom_gives_geometric(self):
        alpha = alpha_from_measure(SpectralMeasure.point_mass(), 2, 8)
        assert np.allclose(alpha.values, HpdSequence.geometric(2, 8).values)

    def test_lebesgue_gives_white_noise(self):
        alpha = alpha_from_measure(SpectralMeasure.lebesgue(), 3, 8)
        assert np.allclose(alpha.values, HpdSequence.white_noise(3, 8).values)

    def test_rotated_atom(self):
        t = 0.9
        alpha = alpha_from_measure(SpectralMeasure.point_mass(theta=t), 2, 6)
        for n in range(7):
            assert alpha.at(n) == pytest.approx(2 ** (-n / 2) * np.exp(-1j * n * t))


class TestModulate:
    def test_atom_modulation(self):
        t = 0.4
        alpha = HpdSequence.geometric(2, 6)
        out = modulate(alpha, SpectralMeasure.point_mass(theta=t))
        for n in range(7):
            assert out.at(n) == pytest.approx(np.exp(-1j * n * t) * alpha.at(n))

    def test_lebesgue_masks_to_white_noise(self):
        out = modulate(HpdSequence.geometric(2, 6), SpectralMeasure.lebesgue())
        assert out.at(0) == 1.0
        assert all(out.at(n) == 0 for n in range(1, 7))

    def test_unit_atom_identity(self):
        alpha = HpdSequence.geometric(2, 6)
        out = modulate(alpha, SpectralMeasure.point_mass())
        assert np.allclose(out.values, alpha.values)

    def test_preserves_consistency(self, rng):
        for _ in range(10):
            alpha = alpha_from_measure(random_measure(rng), 2, 12)
            nu = random_measure(rng)
            assert hpd_check(modulate(alpha, nu), 12).consistent


class TestHpdCheck:
    def test_geometric_consistent(self):
        rep = hpd_check(HpdSequence.geometric(2, 16), 16)
        assert rep.consistent
        assert rep.message == "consistent up to order 16"
        # spectral Toeplitz matrix of the extremal sequence is all-ones
        assert np.allclose(toeplitz_matrix(HpdSequence.geometric(2, 16), 16).data, 1.0)

    def test_decay_reject(self):
        vals = np.array([1.0, 0.8, 0.0, 0.0])
        rep = hpd_check(HpdSequence(2, vals), 3)
        assert not rep.consistent
        assert rep.method == "decay-reject"
        assert rep.witness["n"] == 1

    def test_toeplitz_reject_at_order_three(self):
        # alpha = (1, 0.6, 0, ...): spectral coefficients (1, 0.849, 0, ...);
        # the 3x3 Toeplitz has eigenvalue 1 - 0.6 sqrt2 sqrt2 = -0.2
        vals = np.zeros(4)
        vals[0], vals[1] = 1.0, 0.6
        alpha = HpdSequence(2, vals)
        assert hpd_check(alpha, 2).consistent
        rep = hpd_check(alpha, 3)
        assert not rep.consistent
        assert rep.witness["min_eigenvalue"] == pytest.approx(1 - 1.2, abs=1e-12)

    def test_tree_oracle_cross_validation(self):
        rep = hpd_check(HpdSequence.geometric(2, 8), 8, depth_oracle=4)
        assert rep.consistent and rep.tree_oracle is not None and rep.tree_oracle.psd

    def test_alpha0_must_be_real_nonnegative(self):
        rep = hpd_check(HpdSequence(2, np.array([-1.0, 0.0])), 1)
        assert not rep.consistent and rep.witness["n"] == 0

    def test_decay_bound_for_consistent_sequences(self, rng):
        # every sequence passing the check satisfies the decay bound
        for _ in range(20)[:20]:
            alpha = alpha_from_measure(random_measure(rng), 2, 12)
            rep = hpd_check(alpha, 12)
            assert rep.consistent
            a0 = alpha.at(0).real
            for n in range(13):
                assert abs(alpha.at(n)) <= a0 * 2 ** (-n / 2) + 1e-12


class TestClassification:
    """Finite two-sided check of the spectral classification."""

    def test_forward_measures_give_psd_tree_kernels(self, rng):
        for k in range(40):
            q = 2 if k % 2 == 0 else 3
            mu = random_measure(rng)
            alpha = alpha_from_measure(mu, q, 8)
            res = psd_check(branching_toeplitz(alpha, truncate(q, 4)))
            assert res.psd, f"measure-built kernel failed: {res}"

    def test_converse_failing_alpha_fail_on_tree(self, rng):
        for _ in range(20):
            alpha, order = make_failing_alpha(rng, 2)
            failed = False
            for depth in (2, 4, 8):
                if depth < order - 1:
                    continue
                res = psd_check(branching_toeplitz(alpha, truncate(2, depth)))
                if not res.psd:
                    failed = True
                    break
            assert failed, "Toeplitz-failing alpha produced a PSD tree kernel"

    def test_converse_arity_three(self, rng):
        for _ in range(8):
            alpha, order = make_failing_alpha(rng, 3)
            depth = min(max(order - 1, 2), 7)
            res = psd_check(branching_toeplitz(alpha, truncate(3, depth)))
            assert not res.psd

    def test_poisson_smoothed_coefficients_are_admissible(self, rng):
        # the coefficient sequence of a Poisson-smoothed measure at radius
        # 1/sqrt(q) is exactly the q-admissible family
        from bssp.circle import poisson_convolve

        for q in (2, 3):
            mu = random_measure(rng)
            phi = poisson_convolve(mu, 1.0 / math.sqrt(q))
            alpha = HpdSequence(q, np.array([phi.fourier(n) for n in range(9)]))
            assert hpd_check(alpha, 8).consistent
            assert psd_check(branching_toeplitz(alpha, truncate(q, 4))).psd

    def test_fourier_bound_restatement(self, rng):
        # sequences passing the finite check keep their spectral coefficients
        # inside the unit envelope
        for _ in range(10):
            alpha = alpha_from_measure(random_measure(rng), 2, 10)
            if hpd_check(alpha, 10).consistent:
                a0 = alpha.at(0).real
                for n in range(11):
                    assert abs(alpha.spectral_coefficient(n)) <= a0 + 1e-9


class TestExport:
    def test_csv_pairs(self):
        mat = HermitianMatrix(np.array([[1.0, 1j], [-1j, 2.0]]))
        text = matrix_to_csv(mat)
        rows = text.strip().split("\n")
        assert rows[0].split(",") == ["1.0", "0.0", "0.0", "1.0"]
        assert rows[1].split(",") == ["0.0", "-1.0", "2.0", "0.0"]

    def test_json_round_trip(self):
        mat = branching_toeplitz(HpdSequence.geometric(2, 3), truncate(2, 2))
        back = matrix_from_json(matrix_to_json(mat))
        assert back.labels == mat.labels
        assert np.allclose(back.data, mat.data)
