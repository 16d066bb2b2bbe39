"""Input validation helpers shared across the package."""

import numpy as np


def as_complex_array(x, shape=None, name="array"):
    """Coerce to a complex ndarray, optionally enforcing an exact shape."""
    a = np.asarray(x)
    if not np.iscomplexobj(a):
        a = a.astype(np.complex128)
    if shape is not None and a.shape != tuple(shape):
        raise ValueError(f"{name}: expected shape {tuple(shape)}, got {a.shape}")
    return a


def as_bit_array(bits, name="bits"):
    """Coerce to a flat 0/1 integer array."""
    b = np.asarray(bits)
    if b.ndim != 1:
        b = b.ravel()
    if b.size and not np.isin(b, (0, 1)).all():
        raise ValueError(f"{name}: entries must be 0 or 1")
    return b.astype(np.uint8)


def check_unit_vector(v, name="orientation", tol=1e-12):
    v = np.asarray(v, dtype=float)
    if v.shape != (3,):
        raise ValueError(f"{name}: expected a 3-vector, got shape {v.shape}")
    if abs(float(v @ v) - 1.0) > tol:
        raise ValueError(f"{name}: not unit norm (|v|^2 = {float(v @ v)!r})")
    return v


def check_position_inside(pos, room_dims, name="position"):
    p = np.asarray(pos, dtype=float)
    if p.shape != (3,):
        raise ValueError(f"{name}: expected a 3-vector, got shape {p.shape}")
    dims = np.asarray(room_dims, dtype=float)
    if (p < 0).any() or (p > dims).any():
        raise ValueError(f"{name}: {p.tolist()} outside room {dims.tolist()}")
    return p


def check_positive(value, name):
    if not np.all(np.asarray(value) > 0):
        raise ValueError(f"{name} must be positive, got {value!r}")
    return value
