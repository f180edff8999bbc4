"""JSON encoding of complex scalars, vectors and matrices.

Every complex scalar is written as a ``[re, im]`` pair; vectors and matrices
are row-major nested lists of such pairs. Decoding also accepts a bare real
number wherever a scalar is expected.
"""

import numbers

import numpy as np

from .errors import ShapeError


def encode_complex(value):
    """Encode a complex scalar or array as nested ``[re, im]`` lists."""
    arr = np.asarray(value, dtype=complex)
    pairs = np.stack([arr.real, arr.imag], axis=-1)
    return pairs.tolist()


def decode_complex(obj):
    """Inverse of :func:`encode_complex`.

    Returns a Python ``complex`` for a scalar and an ndarray otherwise.
    """
    if isinstance(obj, numbers.Number) and not isinstance(obj, bool):
        return complex(obj)
    arr = np.asarray(obj, dtype=float)
    if arr.ndim == 0 or arr.shape[-1] != 2:
        raise ShapeError(f"complex entries must be [re, im] pairs, got shape {arr.shape}")
    out = arr[..., 0] + 1j * arr[..., 1]
    if out.ndim == 0:
        return complex(out)
    return out


def encode_real(value):
    """Encode a real scalar or array as plain (nested) floats."""
    arr = np.asarray(value, dtype=float)
    return arr.tolist()
