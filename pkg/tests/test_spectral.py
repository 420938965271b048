import numpy as np
import pytest

from kirchdecay.spectral import (
    DimensionMismatchError,
    SpectralOperator,
    coercivity,
    inner_Au_v,
    norm_alpha,
)


def test_construction_sorts_and_sets_nu():
    op = SpectralOperator([4.0, 1.0, 9.0])
    assert np.array_equal(op.eigenvalues, [1.0, 4.0, 9.0])
    assert op.nu == 1.0
    assert op.dim == 3


@pytest.mark.parametrize("bad", [[], [-1.0], [1.0, np.nan]])
def test_construction_rejects_bad_spectra(bad):
    with pytest.raises(ValueError):
        SpectralOperator(bad)


def test_norm_alpha_examples():
    op = SpectralOperator([1.0, 4.0])
    assert norm_alpha(op, [1.0, 1.0], 0.5) == pytest.approx(np.sqrt(5.0), rel=1e-15)
    assert norm_alpha(op, [0.0, 0.0], 0.7) == 0.0
    assert norm_alpha(SpectralOperator([2.0]), [3.0], 1.0) == pytest.approx(6.0)


def test_norm_alpha_zero_alpha_is_plain_norm_even_on_kernel():
    op = SpectralOperator([0.0, 1.0])
    assert norm_alpha(op, [3.0, 4.0], 0.0) == pytest.approx(5.0)
    # a zero eigenvalue kills the mode for any alpha > 0
    assert norm_alpha(op, [3.0, 0.0], 0.5) == 0.0


def test_inner_examples():
    op = SpectralOperator([1.0, 4.0])
    assert inner_Au_v(op, [1.0, 1.0], [2.0, 0.0]) == pytest.approx(2.0)
    val = inner_Au_v(op, [1.0, 1.0], [1.0, 1.0])
    assert val == pytest.approx(5.0)
    assert val == pytest.approx(norm_alpha(op, [1.0, 1.0], 0.5) ** 2)
    assert inner_Au_v(SpectralOperator([0.0]), [7.0], [9.0]) == 0.0


def test_coercivity_examples():
    assert coercivity(SpectralOperator([1.0, 4.0, 9.0])) == 1.0
    assert coercivity(SpectralOperator([0.0, 1.0])) == 0.0
    assert coercivity(SpectralOperator([1 / 16, 1 / 9, 1 / 4, 1.0])) == 1 / 16


def test_dimension_mismatch():
    op = SpectralOperator([1.0, 2.0])
    with pytest.raises(DimensionMismatchError):
        norm_alpha(op, [1.0], 0.5)
    with pytest.raises(DimensionMismatchError):
        inner_Au_v(op, [1.0, 2.0], [1.0])


def test_negative_alpha_rejected():
    op = SpectralOperator([1.0])
    with pytest.raises(ValueError):
        norm_alpha(op, [1.0], -0.5)


def test_random_inequalities():
    rng = np.random.default_rng(1234)
    for _ in range(500):
        n = rng.integers(1, 9)
        lam = rng.uniform(0.0, 10.0, n)
        op = SpectralOperator(lam)
        u = rng.standard_normal(n)
        v = rng.standard_normal(n)
        lhs = inner_Au_v(op, u, v) ** 2
        rhs = norm_alpha(op, u, 0.5) ** 2 * norm_alpha(op, v, 0.5) ** 2
        assert lhs <= rhs * (1.0 + 1e-12)
        # interpolation between |u| and |Au|
        mid = norm_alpha(op, u, 0.5) ** 2
        assert mid <= norm_alpha(op, u, 0.0) * norm_alpha(op, u, 1.0) * (1.0 + 1e-12)
        # |Au|^2 through the weight identity
        lam_sorted = op.eigenvalues
        assert norm_alpha(op, u, 1.0) ** 2 == pytest.approx(
            float(np.dot(lam_sorted**2, u * u)), rel=1e-13, abs=1e-300
        )
