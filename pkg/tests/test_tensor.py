import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dense import dense_contract, dense_inner, dense_symmetrize, to_dense
from wienerchaos.tensor import (
    BipartiteTensor,
    ShapeError,
    SymmetricTensor,
    as_bipartite,
    basis_tensor,
    contract,
    contraction_norm_sq_dual,
    inner,
    norm,
    orbit_size,
    random_symmetric,
    read_tensor,
    symmetrize,
    tensor_power,
)


def rm33_pair():
    f1 = SymmetricTensor(2, 2, {(1, 1): -0.5, (1, 2): 0.5, (2, 2): 0.5})
    f2 = SymmetricTensor(2, 2, {(1, 1): 0.5, (1, 2): 0.5, (2, 2): -0.5})
    return f1, f2


class TestConstruction:
    def test_rejects_unsorted_key(self):
        with pytest.raises(ValueError):
            SymmetricTensor(2, 3, {(2, 1): 1.0})

    def test_rejects_index_out_of_range(self):
        with pytest.raises(ValueError):
            SymmetricTensor(2, 3, {(1, 4): 1.0})
        with pytest.raises(ValueError):
            SymmetricTensor(1, 3, {(0,): 1.0})

    def test_from_entries_sorts_and_checks_conflicts(self):
        f = SymmetricTensor.from_entries(2, 3, {(2, 1): 1.5, (1, 2): 1.5})
        assert f.coeffs == {(1, 2): 1.5}
        with pytest.raises(ValueError):
            SymmetricTensor.from_entries(2, 3, {(2, 1): 1.5, (1, 2): 1.0})

    def test_order_zero_has_one_entry(self):
        assert SymmetricTensor(0, 3).coeffs == {(): 0.0}
        assert float(SymmetricTensor.scalar(2.5, 3)) == 2.5

    def test_orbit_size(self):
        assert orbit_size((1, 1, 2)) == 3
        assert orbit_size((1, 2, 3)) == 6
        assert orbit_size(()) == 1


class TestTensorPower:
    def test_basis_vector(self):
        assert tensor_power([1, 0], 2).coeffs == {(1, 1): 1.0}

    def test_identity_case(self):
        assert tensor_power([0.3, -2.0], 1).coeffs == {(1,): 0.3, (2,): -2.0}

    def test_ones(self):
        f = tensor_power([1, 1], 2)
        assert f.coeffs == {(1, 1): 1.0, (1, 2): 1.0, (2, 2): 1.0}
        assert f.norm_sq() == pytest.approx(4.0)

    def test_empty_vector(self):
        with pytest.raises(ValueError):
            tensor_power([], 2)

    def test_norm_is_power_of_vector_norm(self, rng):
        h = rng.standard_normal(4)
        for q in range(5):
            assert tensor_power(h, q).norm() == pytest.approx(np.linalg.norm(h) ** q, rel=1e-12)


class TestContract:
    def test_unit_self_pairing(self):
        e1 = basis_tensor(1, 1, 3)
        assert float(contract(e1, e1, 1)) == 1.0

    def test_offdiagonal_single_entry(self):
        f = SymmetricTensor(2, 2, {(1, 2): 1.0})
        c = contract(f, f, 1)
        assert c.coeffs == {((1,), (1,)): 1.0, ((2,), (2,)): 1.0}
        assert c.norm_sq() == pytest.approx(2.0)

    def test_rm33_pair(self):
        f1, f2 = rm33_pair()
        c = contract(f1, f2, 1)
        assert c.coeffs == {((1,), (2,)): -0.5, ((2,), (1,)): 0.5}
        assert c.norm_sq() == 0.5
        assert symmetrize(c).coeffs == {}

    def test_full_contraction_is_inner_product(self, rng):
        f = random_symmetric(3, 4, rng)
        g = random_symmetric(3, 4, rng)
        assert float(contract(f, g, 3)) == pytest.approx(inner(f, g), rel=1e-12)

    def test_zero_contraction_norm_is_product(self, rng):
        f = random_symmetric(2, 4, rng)
        g = random_symmetric(3, 4, rng)
        assert contract(f, g, 0).norm() == pytest.approx(f.norm() * g.norm(), rel=1e-12)

    def test_errors(self):
        f = basis_tensor(1, 2, 3)
        with pytest.raises(ValueError):
            contract(f, f, 3)
        with pytest.raises(ShapeError):
            contract(f, basis_tensor(1, 2, 4), 1)


class TestSymmetrize:
    def test_symmetric_input_unchanged(self, rng):
        f = random_symmetric(3, 3, rng)
        for p in range(4):
            assert symmetrize(as_bipartite(f, p)).coeffs == pytest.approx(f.coeffs, rel=1e-14)

    def test_two_permutation_average(self):
        t = BipartiteTensor(1, 1, 2, {((1,), (2,)): 1.0})
        s = symmetrize(t)
        assert s.coeffs == {(1, 2): 0.5}
        assert s.norm_sq() == 0.5

    def test_projection(self, rng):
        f, g = random_symmetric(2, 3, rng), random_symmetric(3, 3, rng)
        once = symmetrize(contract(f, g, 1))
        twice = symmetrize(as_bipartite(once, 1))
        assert twice.coeffs == pytest.approx(once.coeffs, rel=1e-12)

    def test_scalar(self):
        t = BipartiteTensor(0, 0, 2, {((), ()): 3.0})
        assert float(symmetrize(t)) == 3.0


class TestInnerAndNorm:
    def test_disjoint_support(self):
        assert inner(tensor_power([1, 0], 2), tensor_power([0, 1], 2)) == 0.0

    def test_rm33_orthogonal(self):
        assert inner(*rm33_pair()) == 0.0

    def test_orbit_norm(self):
        assert norm(SymmetricTensor(2, 2, {(1, 2): 1.0})) ** 2 == pytest.approx(2.0)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            inner(basis_tensor(1, 2, 3), basis_tensor(1, 1, 3))
        with pytest.raises(ShapeError):
            inner(basis_tensor(1, 2, 3), as_bipartite(basis_tensor(1, 2, 3), 1))


class TestDualNorm:
    def test_examples(self):
        e1 = basis_tensor(1, 1, 2)
        assert contraction_norm_sq_dual(e1, e1, 1) == 1.0
        f1, f2 = rm33_pair()
        assert contraction_norm_sq_dual(f1, f2, 1) == pytest.approx(0.5, abs=1e-15)
        f = SymmetricTensor(2, 2, {(1, 2): 1.0})
        assert contraction_norm_sq_dual(f, f, 1) == pytest.approx(2.0)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(1, 4), st.integers(1, 4), st.integers(1, 5))
    def test_matches_direct(self, seed, p, q, d):
        rng = np.random.default_rng(seed)
        f, g = random_symmetric(p, d, rng), random_symmetric(q, d, rng)
        for r in range(min(p, q) + 1):
            direct = contract(f, g, r).norm_sq()
            assert abs(direct - contraction_norm_sq_dual(f, g, r)) <= 1e-10 * (1 + direct)


class TestLinear:
    def test_scale_norm(self, rng):
        f = random_symmetric(3, 4, rng)
        assert (-2.5 * f).norm() == pytest.approx(2.5 * f.norm(), rel=1e-14)

    def test_cancellation_prunes(self, rng):
        f = random_symmetric(3, 4, rng)
        assert (f + (-1) * f).coeffs == {}

    def test_inner_distributes(self, rng):
        f, g, h = (random_symmetric(2, 5, rng) for _ in range(3))
        assert inner(f + g, h) == pytest.approx(inner(f, h) + inner(g, h), rel=1e-12, abs=1e-12)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            basis_tensor(1, 2, 3) + basis_tensor(1, 1, 3)


class TestTextFormat:
    def test_round_trip(self, rng, tmp_path):
        f = random_symmetric(3, 4, rng)
        path = tmp_path / "f.txt"
        path.write_text(f.to_text())
        assert read_tensor(path) == f

    def test_parse_literal(self):
        f = SymmetricTensor.from_text("2 3\n1 2 0.5\n3 3 -1\n")
        assert f.coeffs == {(1, 2): 0.5, (3, 3): -1.0}

    def test_bad_row(self):
        with pytest.raises(ValueError):
            SymmetricTensor.from_text("2 3\n1 0.5\n")


class TestDenseOracle:
    """Sparse kernels against full materialization, p + q <= 6, d <= 4."""

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(0, 3), st.integers(0, 3), st.integers(1, 4))
    def test_contract_and_symmetrize(self, seed, p, q, d):
        rng = np.random.default_rng(seed)
        f, g = random_symmetric(p, d, rng), random_symmetric(q, d, rng)
        F, G = to_dense(f), to_dense(g)
        for r in range(min(p, q) + 1):
            c = contract(f, g, r)
            C = dense_contract(F, G, r)
            np.testing.assert_allclose(to_dense(c), C, atol=1e-12)
            np.testing.assert_allclose(to_dense(symmetrize(c)), dense_symmetrize(C), atol=1e-12)
            assert c.norm_sq() == pytest.approx(dense_inner(C, C), rel=1e-12, abs=1e-12)

    def test_symmetrization_contracts_norm(self, rng):
        for _ in range(20):
            f, g = random_symmetric(2, 3, rng), random_symmetric(3, 3, rng)
            t = contract(f, g, 0)
            assert symmetrize(t).norm() <= t.norm() * (1 + 1e-12)
            assert math.isclose(t.norm(), f.norm() * g.norm(), rel_tol=1e-12)


def test_flat_inner_matches_dense(rng):
    for _ in range(30):
        f = random_symmetric(3, 3, rng)
        g = random_symmetric(2, 3, rng)
        for r in range(1, 3):
            a, b = contract(f, g, r), contract(g, f, r)
            assert inner(a, b) == pytest.approx(dense_inner(to_dense(a), to_dense(b)), rel=1e-12, abs=1e-12)
