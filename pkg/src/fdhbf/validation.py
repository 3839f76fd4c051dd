"""Input validation helpers used at public entry points."""

import numbers

import numpy as np

from .exceptions import ParameterError, ShapeError


def check_matrix(a, name="matrix", *, allow_empty=False):
    """Return ``a`` as a finite 2-D complex128 array.

    1-D input is promoted to a column. Raises :class:`ShapeError` for
    higher-rank or empty input and :class:`ParameterError` for non-finite
    entries.
    """
    arr = np.asarray(a)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    elif arr.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got ndim={arr.ndim}")
    if arr.size == 0 and not allow_empty:
        raise ShapeError(f"{name} is empty")
    arr = arr.astype(np.complex128, copy=False)
    if not np.all(np.isfinite(arr)):
        raise ParameterError(f"{name} has non-finite entries")
    return arr


def check_conformable(a, b, names=("left", "right")):
    """Raise if ``a @ b`` is undefined."""
    if a.shape[1] != b.shape[0]:
        raise ShapeError(
            f"{names[0]} {a.shape} and {names[1]} {b.shape} do not conform"
        )


def check_positive(value, name, *, strict=True):
    if not isinstance(value, numbers.Real) or np.isnan(value):
        raise ParameterError(f"{name} must be a real number, got {value!r}")
    if strict and not value > 0:
        raise ParameterError(f"{name} must be > 0, got {value!r}")
    if not strict and value < 0:
        raise ParameterError(f"{name} must be >= 0, got {value!r}")
    return float(value)


def check_streams(ns, name="ns"):
    if isinstance(ns, bool) or not isinstance(ns, numbers.Integral) or ns < 1:
        raise ParameterError(f"{name} must be a positive integer, got {ns!r}")
    return int(ns)
