import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from layercalc.errors import ShapeError
from layercalc.serialization import decode_complex, encode_complex, encode_real

finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


def test_scalar_round_trip():
    assert encode_complex(1 - 2j) == [1.0, -2.0]
    assert decode_complex([1.0, -2.0]) == 1 - 2j
    assert decode_complex(3) == 3 + 0j


def test_rejects_bad_pairs():
    with pytest.raises(ShapeError):
        decode_complex([1.0, 2.0, 3.0])
    with pytest.raises(ShapeError):
        decode_complex([[1.0], [2.0]])


def test_encode_real():
    assert encode_real(np.eye(2)) == [[1.0, 0.0], [0.0, 1.0]]


@given(re=hnp.arrays(float, hnp.array_shapes(max_dims=2, max_side=5), elements=finite),
       seed=st.integers(0, 2**31 - 1))
def test_array_round_trip_through_json(re, seed):
    im = np.random.default_rng(seed).standard_normal(re.shape)
    a = re + 1j * im
    back = decode_complex(json.loads(json.dumps(encode_complex(a))))
    assert np.array_equal(np.asarray(back), a)
