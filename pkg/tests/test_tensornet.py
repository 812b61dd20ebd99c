import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from schmidt_circuits import tensornet as tn

R2 = 1 / math.sqrt(2)


def random_unit(rng, n):
    v = rng.normal(size=2**n)
    return v / np.linalg.norm(v)


class TestNormalize:
    def test_pythagorean(self):
        np.testing.assert_allclose(tn.normalize([3, 4], 1), [0.6, 0.8])

    def test_padding(self):
        np.testing.assert_array_equal(tn.normalize([1, 0, 0], 2), [1, 0, 0, 0])

    def test_iris_row(self):
        row = np.array([5.1, 3.5, 1.4, 0.2])
        norm = math.sqrt(sum(v * v for v in row))
        assert norm == pytest.approx(6.3450768, abs=1e-7)
        np.testing.assert_allclose(tn.normalize(row), row / norm, rtol=1e-15)

    def test_zero(self):
        with pytest.raises(ValueError, match="zero vector"):
            tn.normalize([0.0, 0.0])

    def test_too_long(self):
        with pytest.raises(ValueError):
            tn.normalize([1, 2, 3], 1)

    @given(arrays(float, st.integers(1, 64), elements=st.floats(-1e3, 1e3)))
    def test_unit_norm(self, raw):
        if np.linalg.norm(raw) < 1e-6:
            return
        v = tn.normalize(raw)
        assert abs(np.linalg.norm(v) - 1) < 1e-9
        assert v.size == 2 ** tn.num_qubits(raw.size)


class TestMeanVector:
    def test_singleton(self):
        v = tn.normalize([1, 2, 3, 4])
        np.testing.assert_allclose(tn.mean_vector([v]), v)

    def test_symmetric(self):
        np.testing.assert_allclose(tn.mean_vector([[1, 0], [0, 1]]), [R2, R2])

    def test_sum_then_renormalize(self):
        # [0.6,0.8]+[0.8,0.6] = [1.4,1.4]
        np.testing.assert_allclose(tn.mean_vector([[0.6, 0.8], [0.8, 0.6]]), [R2, R2])

    def test_degenerate(self):
        with pytest.raises(ValueError, match="degenerate mean"):
            tn.mean_vector([[1, 0], [-1, 0]])


class TestDecompose:
    def test_product_state(self):
        d = tn.decompose(np.array([1.0, 0, 0, 0]))
        assert len(d) == 1
        assert d.terms[0].coeff == pytest.approx(1.0)
        np.testing.assert_allclose(np.array(d.terms[0].factors), [[1, 0], [1, 0]], atol=1e-15)

    def test_bell(self):
        d = tn.decompose(np.array([R2, 0, 0, R2]))
        assert len(d) == 2
        np.testing.assert_allclose(d.coeffs, [R2, R2])
        factor_sets = sorted(tuple(np.round(np.concatenate(t.factors), 12)) for t in d.terms)
        assert factor_sets == [(0, 1, 0, 1), (1, 0, 1, 0)]

    def test_random_three_qubits(self):
        v = random_unit(np.random.default_rng(3), 3)
        d = tn.decompose(v)
        assert len(d) <= 8
        assert np.linalg.norm(tn.reconstruct(d) - v) < 1e-10

    @pytest.mark.parametrize("n", range(1, 9))
    def test_generic_term_count(self, n):
        # n-1 two-way splits, each of full rank for a generic vector
        assert len(tn.decompose(random_unit(np.random.default_rng(100 + n), n))) == 2 ** (n - 1)

    def test_rejects_non_unit(self):
        with pytest.raises(ValueError):
            tn.decompose(np.array([1.0, 1.0]))

    def test_sorted_and_canonical(self):
        d = tn.decompose(random_unit(np.random.default_rng(0), 5))
        assert np.all(np.diff(d.coeffs) <= 0)
        for term in d.terms:
            assert term.coeff >= 0
            for f in term.factors:
                assert abs(np.linalg.norm(f) - 1) < 1e-12
            for f in term.factors[:-1]:
                first = f[np.abs(f) > 1e-14][0]
                assert first >= 0

    def test_deterministic(self):
        v = random_unit(np.random.default_rng(9), 6)
        a, b = tn.decompose(v), tn.decompose(v.copy())
        assert all(
            x.coeff == y.coeff and all(np.array_equal(p, q) for p, q in zip(x.factors, y.factors))
            for x, y in zip(a.terms, b.terms)
        )

    @pytest.mark.parametrize("n", range(1, 9))
    def test_orthonormal_and_parseval(self, n):
        d = tn.decompose(random_unit(np.random.default_rng(n), n))
        gram = tn.gram_matrix(d)
        np.testing.assert_allclose(gram, np.eye(len(d)), atol=1e-9)
        assert abs(np.sum(d.coeffs**2) - 1) < 1e-9
        assert len(d) <= 2**n

    @settings(max_examples=60, deadline=None)
    @given(st.integers(1, 7), st.integers(0, 2**32 - 1))
    def test_round_trip(self, n, seed):
        v = random_unit(np.random.default_rng(seed), n)
        assert np.linalg.norm(tn.reconstruct(tn.decompose(v)) - v) < 1e-10


class TestReconstruct:
    def test_kron(self):
        d = tn.TensorDecomposition(2, (tn.TensorTerm(1.0, (np.array([1.0, 0]), np.array([0.0, 1]))),))
        np.testing.assert_array_equal(tn.reconstruct(d), [0, 1, 0, 0])

    def test_bell(self):
        v = np.array([R2, 0, 0, R2])
        np.testing.assert_allclose(tn.reconstruct(tn.decompose(v)), v, atol=1e-15)


class TestTruncate:
    def test_dominant_term(self):
        # coefficients roughly {0.98, 0.21}: only the first clears 0.3
        v = np.array([0.95, 0, 0, 0.2])
        v /= np.linalg.norm(v)
        d = tn.decompose(v)
        t = tn.truncate(d, 0.3)
        assert t.k == 1
        dropped = d.coeffs[1:]
        assert t.delta_psi == pytest.approx(np.sqrt(np.sum(dropped**2)), abs=1e-12)

    def test_no_truncation(self):
        d = tn.decompose(random_unit(np.random.default_rng(1), 4))
        t = tn.truncate(d, 0.0, 16)
        assert t.k == len(d)
        assert t.delta_psi < 1e-12

    def test_bell(self):
        t = tn.truncate(tn.decompose(np.array([R2, 0, 0, R2])), 0.3)
        assert t.k == 2 and t.delta_psi < 1e-12

    def test_at_least_one_and_cap(self):
        d = tn.decompose(np.full(16, 0.25))  # product of |+> states, one term
        assert tn.truncate(d, 2.0).k == 1
        d = tn.decompose(random_unit(np.random.default_rng(2), 5))
        assert tn.truncate(d, 0.0, k_max=3).k == 3

    def test_threshold_rule(self):
        d = tn.decompose(random_unit(np.random.default_rng(4), 6))
        for gamma in (0.05, 0.1, 0.2):
            t = tn.truncate(d, gamma)
            assert all(term.coeff >= gamma for term in t.kept.terms)
            assert all(term.coeff < gamma for term in t.dropped.terms)

    def test_error_identity_and_monotone(self):
        d = tn.decompose(random_unit(np.random.default_rng(5), 6))
        errors = []
        for k in range(1, len(d) + 1):
            t = tn.truncate_to_k(d, k)
            assert abs(t.delta_psi**2 - np.sum(t.dropped.coeffs**2)) < 1e-9
            errors.append(t.delta_psi)
        assert np.all(np.diff(errors) <= 1e-12)


class TestTargetProbabilities:
    def test_bell(self):
        t = tn.truncate(tn.decompose(np.array([R2, 0, 0, R2])), 0.0)
        np.testing.assert_allclose(tn.target_probabilities(t), [0.5, 0, 0, 0.5], atol=1e-15)

    def test_renormalized_single_term(self):
        term = tn.TensorTerm(0.9, (np.array([1.0, 0]), np.array([1.0, 0])))
        kept = tn.TensorDecomposition(2, (term,))
        t = tn.TruncationResult(kept, tn.TensorDecomposition(2, ()), 0.3, 0.0)
        np.testing.assert_allclose(tn.target_probabilities(t), [1, 0, 0, 0])

    def test_sums_to_one(self):
        t = tn.truncate(tn.decompose(random_unit(np.random.default_rng(6), 5)), 0.3)
        assert abs(tn.target_probabilities(t).sum() - 1) < 1e-12


def test_json_export_round_trip():
    v = random_unit(np.random.default_rng(7), 3)
    full = tn.decompose(v)
    t = tn.truncate(full, 0.3)
    data = json.loads(tn.dumps(t, full))
    assert set(data) >= {"n", "terms", "gamma", "k", "delta_psi"}
    back = tn.from_dict(data)
    assert np.array_equal(tn.reconstruct(back), tn.reconstruct(full))
