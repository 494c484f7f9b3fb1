import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chandiff.signals import (
    ComplexSymbolBlock,
    RealSignalBlock,
    normalize_power,
    normalize_real,
    pack_complex,
    unpack_real,
)


def test_pack_k1():
    xc = pack_complex(RealSignalBlock(np.array([1.0, 2.0])))
    assert xc.re.tolist() == [1.0] and xc.im.tolist() == [2.0]


def test_pack_k2():
    xc = pack_complex(RealSignalBlock(np.array([1.0, 0.0, 0.0, 1.0])))
    assert xc.re.tolist() == [1.0, 0.0] and xc.im.tolist() == [0.0, 1.0]


def test_unpack_examples():
    assert unpack_real(ComplexSymbolBlock(np.array([3.0]), np.array([4.0]))).values.tolist() == [3.0, 4.0]
    assert unpack_real(ComplexSymbolBlock(np.array([0.0]), np.array([0.0]))).values.tolist() == [0.0, 0.0]


@given(st.integers(min_value=1, max_value=16), st.integers(min_value=0, max_value=2**31))
@settings(max_examples=50, deadline=None)
def test_round_trip_identity(k, seed):
    x = np.random.default_rng(seed).normal(size=2 * k)
    assert np.array_equal(unpack_real(pack_complex(RealSignalBlock(x))).values, x)
    xc = ComplexSymbolBlock(x[:k], x[k:])
    packed = pack_complex(unpack_real(xc))
    assert np.array_equal(packed.re, xc.re) and np.array_equal(packed.im, xc.im)


def test_odd_length_rejected():
    with pytest.raises(ValueError):
        RealSignalBlock(np.array([1.0, 2.0, 3.0]))


def test_nonfinite_rejected():
    with pytest.raises(ValueError):
        RealSignalBlock(np.array([1.0, np.nan]))


def test_mismatched_re_im_rejected():
    with pytest.raises(ValueError):
        ComplexSymbolBlock(np.zeros(3), np.zeros(2))


def test_normalize_scales_to_unit_norm():
    out = normalize_power(ComplexSymbolBlock(np.array([2.0]), np.array([0.0])))
    assert out.re.tolist() == [1.0] and out.im.tolist() == [0.0]


def test_normalize_symmetric_case():
    out = normalize_power(ComplexSymbolBlock(np.array([1.0]), np.array([1.0])))
    np.testing.assert_allclose(out.re, [1 / np.sqrt(2)])
    np.testing.assert_allclose(out.im, [1 / np.sqrt(2)])


def test_normalize_random_block_unit_power():
    rng = np.random.default_rng(3)
    xc = ComplexSymbolBlock(rng.normal(size=8), rng.normal(size=8))
    assert abs(normalize_power(xc).power() - 1.0) < 1e-12


def test_normalize_zero_block_rejected():
    with pytest.raises(ValueError):
        normalize_power(ComplexSymbolBlock(np.zeros(4), np.zeros(4)))
    with pytest.raises(ValueError):
        normalize_real(np.zeros(4))


def test_normalize_real_matches_complex_path():
    rng = np.random.default_rng(4)
    x = rng.normal(size=(5, 8))
    via_complex = unpack_real(normalize_power(pack_complex(RealSignalBlock(x)))).values
    np.testing.assert_allclose(normalize_real(x), via_complex, atol=1e-15)
