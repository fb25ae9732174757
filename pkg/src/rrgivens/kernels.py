"""In-place Givens rotation primitives on dense matrices.

All kernels work on a set of *disjoint* coordinate pairs at once (a whole
block, or a worker's share of one), so pairs in one call must not share an
index.  The arithmetic per element is always::

    new_i = a * x_i - s * x_j
    new_j = b * x_i + c * x_j

with ``a = e^{i phi} cos`` and ``b = e^{i phi} sin`` (``a = c``, ``b = s``
in the real case), evaluated in that order so results are reproducible
bit for bit regardless of how pairs are split between workers.  The loops
are compiled with numba and release the GIL, so worker threads run them
concurrently.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .schedule import ParameterError

_EPS4 = 4 * np.finfo(np.float64).eps


@dataclass(frozen=True)
class RotationParams:
    """Precomputed cos/sin (and optional unit phase) for one pair."""

    cos_theta: float
    sin_theta: float
    phase: complex | None = None

    def __post_init__(self):
        if abs(self.cos_theta ** 2 + self.sin_theta ** 2 - 1.0) > _EPS4:
            raise ParameterError("cos^2 + sin^2 must equal 1")
        if self.phase is not None and abs(abs(self.phase) - 1.0) > _EPS4:
            raise ParameterError("phase must have unit modulus")

    @classmethod
    def from_angles(cls, theta: float, phi: float | None = None) -> RotationParams:
        c, s = trig(np.array([theta], dtype=np.float64))
        if phi is None:
            return cls(float(c[0]), float(s[0]))
        return cls(float(c[0]), float(s[0]), complex(unit_phase(np.array([phi]))[0]))


def trig(theta: np.ndarray, dtype=np.float64) -> tuple[np.ndarray, np.ndarray]:
    """Cosines and sines of an angle vector, computed once per call."""
    theta = np.asarray(theta, dtype=np.float64)
    return np.cos(theta).astype(dtype, copy=False), np.sin(theta).astype(dtype, copy=False)


def unit_phase(phi: np.ndarray) -> np.ndarray:
    """``exp(1j * phi)`` assembled from real cos/sin (no complex exp)."""
    phi = np.asarray(phi, dtype=np.float64)
    out = np.empty(phi.shape, dtype=np.complex128)
    out.real = np.cos(phi)
    out.imag = np.sin(phi)
    return out


def _check_indices(mat: np.ndarray, axis: int, i, j) -> tuple[np.ndarray, np.ndarray]:
    i = np.atleast_1d(np.asarray(i, dtype=np.intp))
    j = np.atleast_1d(np.asarray(j, dtype=np.intp))
    size = mat.shape[axis]
    if i.shape != j.shape:
        raise ParameterError("index arrays differ in length")
    if i.size and (min(i.min(), j.min()) < 0 or max(i.max(), j.max()) >= size):
        raise ParameterError(f"index out of range for axis of length {size}")
    if np.any(i == j):
        raise ParameterError("a rotation needs two distinct indices")
    return i, j


def _coeffs(mat, c, s, phase):
    """Per-pair coefficient arrays in the matrix's real dtype.

    Real case: ``(c, s)``.  With a phase: ``(a.real, a.imag, b.real,
    b.imag, c, s)`` where ``a = phase * c`` and ``b = phase * s``.
    """
    rt = mat.real.dtype
    c = np.ascontiguousarray(np.atleast_1d(c), dtype=rt)
    s = np.ascontiguousarray(np.atleast_1d(s), dtype=rt)
    if not np.iscomplexobj(mat):
        return c, s
    if phase is None:
        pr, pi = np.ones_like(c), np.zeros_like(c)
    else:
        phase = np.atleast_1d(phase)
        pr = np.ascontiguousarray(phase.real, dtype=rt)
        pi = np.ascontiguousarray(phase.imag, dtype=rt)
    return pr * c, pi * c, pr * s, pi * s, c, s


# Compiled without fastmath, so no multiply-add contraction happens and
# each element sees exactly the multiplies and adds written here.  Complex
# entries are split into real parts by hand: numpy and numba may each use
# fused instructions for complex multiplication, which would make the
# result depend on the library rather than on the formula.
@njit(nogil=True, cache=True)
def _rows_real(mat, ii, jj, c, s):
    for k in range(ii.shape[0]):
        i, j = ii[k], jj[k]
        ck, sk = c[k], s[k]
        for col in range(mat.shape[1]):
            xi = mat[i, col]
            xj = mat[j, col]
            mat[i, col] = ck * xi - sk * xj
            mat[j, col] = sk * xi + ck * xj


@njit(nogil=True, cache=True)
def _rows_complex(re, im, ii, jj, ar, ai, br, bi, c, s):
    for k in range(ii.shape[0]):
        i, j = ii[k], jj[k]
        for col in range(re.shape[1]):
            xr, xi, yr, yi = re[i, col], im[i, col], re[j, col], im[j, col]
            re[i, col] = (ar[k] * xr - ai[k] * xi) - s[k] * yr
            im[i, col] = (ar[k] * xi + ai[k] * xr) - s[k] * yi
            re[j, col] = (br[k] * xr - bi[k] * xi) + c[k] * yr
            im[j, col] = (br[k] * xi + bi[k] * xr) + c[k] * yi


@njit(nogil=True, cache=True)
def _cols_real(mat, ii, jj, c, s):
    for k in range(ii.shape[0]):
        i, j = ii[k], jj[k]
        ck, sk = c[k], s[k]
        for row in range(mat.shape[0]):
            xi = mat[row, i]
            xj = mat[row, j]
            mat[row, i] = ck * xi - sk * xj
            mat[row, j] = sk * xi + ck * xj


@njit(nogil=True, cache=True)
def _cols_complex(re, im, ii, jj, ar, ai, br, bi, c, s):
    for k in range(ii.shape[0]):
        i, j = ii[k], jj[k]
        for row in range(re.shape[0]):
            xr, xi, yr, yi = re[row, i], im[row, i], re[row, j], im[row, j]
            re[row, i] = (ar[k] * xr - ai[k] * xi) - s[k] * yr
            im[row, i] = (ar[k] * xi + ai[k] * xr) - s[k] * yi
            re[row, j] = (br[k] * xr - bi[k] * xi) + c[k] * yr
            im[row, j] = (br[k] * xi + bi[k] * xr) + c[k] * yi


def _check_matrix(mat) -> None:
    if not isinstance(mat, np.ndarray) or mat.ndim != 2:
        raise ParameterError("expected a 2-D numpy array")
    if mat.dtype not in (np.float32, np.float64, np.complex64, np.complex128):
        raise ParameterError(f"unsupported dtype {mat.dtype}")


def rotate_rows_batch(mat: np.ndarray, i, j, c, s, phase=None) -> None:
    """Left-multiply ``mat`` by the Givens rotations of pairs ``(i[k], j[k])``."""
    _check_matrix(mat)
    i, j = _check_indices(mat, 0, i, j)
    if phase is not None and not np.iscomplexobj(mat):
        raise ParameterError("a phase needs a complex matrix")
    coeffs = _coeffs(mat, c, s, phase)
    if len(coeffs) == 2:
        _rows_real(mat, i, j, *coeffs)
    else:
        _rows_complex(mat.real, mat.imag, i, j, *coeffs)


def rotate_cols_inverse_batch(mat: np.ndarray, i, j, c, s, phase=None) -> None:
    """Right-multiply ``mat`` by the adjoint of each pair's rotation.

    Undoes the effect of :func:`rotate_rows_batch` with the same arguments
    applied from the left, i.e. ``rotate_rows(I)`` followed by this is ``I``.
    Fortran-ordered input keeps the column access contiguous.
    """
    _check_matrix(mat)
    i, j = _check_indices(mat, 1, i, j)
    if phase is not None and not np.iscomplexobj(mat):
        raise ParameterError("a phase needs a complex matrix")
    coeffs = _coeffs(mat, c, s, None if phase is None else np.conj(phase))
    if len(coeffs) == 2:
        _cols_real(mat, i, j, *coeffs)
    else:
        _cols_complex(mat.real, mat.imag, i, j, *coeffs)


def rotate_rows(mat: np.ndarray, i: int, j: int, p: RotationParams) -> None:
    """Rotate rows ``i`` and ``j`` of ``mat`` in place.

    Example:
        >>> m = np.eye(2)
        >>> rotate_rows(m, 0, 1, RotationParams.from_angles(np.pi / 2))
        >>> np.round(m, 12) + 0.0
        array([[ 0., -1.],
               [ 1.,  0.]])
    """
    rotate_rows_batch(mat, i, j, p.cos_theta, p.sin_theta, p.phase)


def rotate_cols_inverse(mat: np.ndarray, i: int, j: int, p: RotationParams) -> None:
    """Right-multiply ``mat`` in place by the adjoint of the rotation on ``(i, j)``."""
    rotate_cols_inverse_batch(mat, i, j, p.cos_theta, p.sin_theta, p.phase)
