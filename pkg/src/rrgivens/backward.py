"""Block-parallel gradient of a loss with respect to the Givens angles.

The sweep walks the blocks last to first and keeps two running matrices in
place:

* ``u_fwd``: the product of all blocks before the current one, obtained
  from ``U`` by right-multiplying with the adjoint of each visited block.
* ``m_mat``: the product of the current and later blocks applied to
  ``Gamma^H``, obtained from ``Gamma^H`` by left-multiplying with each
  visited block.

For a pair ``(i, j)`` of the current block the loss derivative is the
row sum of ``m_mat[i] * u_fwd[:, j] - m_mat[j] * u_fwd[:, i]``.  One row per
pair goes into a scratch matrix that is reduced with a fixed tree, so the
gradient is bitwise reproducible for any worker count.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from numba import njit

from .forward import OrthogonalConfig, check_angles
from .kernels import rotate_cols_inverse_batch, rotate_rows_batch, trig
from .parallel import BlockRunner, tree_row_sum_parallel
from .schedule import ParameterError, RotationSchedule

STALE_TOL = 1e-6


class StaleMatrixWarning(UserWarning):
    """The ``u`` handed to a backward pass is not orthogonal/unitary."""


@dataclass
class BackwardWorkspace:
    u_fwd: np.ndarray
    m_mat: np.ndarray
    a_mat: np.ndarray
    d_vec: np.ndarray

    @classmethod
    def allocate(cls, s: RotationSchedule, dtype=np.float64, with_phase: bool = False):
        """Buffers for one call; ``with_phase`` doubles the scratch height."""
        n, half = s.n, s.block_size
        rows = 2 * half if with_phase else half
        real = np.empty(0, dtype=dtype).real.dtype
        return cls(u_fwd=np.empty((n, n), dtype=dtype, order="F"),
                   m_mat=np.empty((n, n), dtype=dtype),
                   a_mat=np.zeros((rows, n), dtype=real),
                   d_vec=np.zeros(rows, dtype=real))

    def fits(self, s: RotationSchedule, dtype, with_phase: bool) -> bool:
        rows = s.block_size * (2 if with_phase else 1)
        return (self.u_fwd.shape == (s.n, s.n) and self.u_fwd.dtype == dtype
                and self.u_fwd.flags.f_contiguous
                and self.m_mat.shape == (s.n, s.n) and self.m_mat.dtype == dtype
                and self.a_mat.shape == (rows, s.n) and self.d_vec.shape == (rows,))


def probe_orthogonality(u: np.ndarray, samples: int = 8) -> float:
    """Max deviation of ``u[:, S]^H u[:, S]`` from identity over a few columns."""
    n = u.shape[1]
    cols = np.unique(np.linspace(0, n - 1, min(n, samples)).astype(int))
    sub = u[:, cols]
    gram = sub.conj().T @ sub
    return float(np.max(np.abs(gram - np.eye(len(cols)))))


def _check_square(name: str, mat, n: int, dtype) -> np.ndarray:
    arr = np.asarray(mat)
    if arr.shape != (n, n):
        raise ParameterError(f"{name} has shape {arr.shape}, expected ({n}, {n})")
    return arr.astype(dtype, copy=False)


def _warn_if_stale(u: np.ndarray) -> None:
    err = probe_orthogonality(u)
    if not err <= STALE_TOL:
        warnings.warn(f"u deviates from orthogonality by {err:.3g}; it may be stale",
                      StaleMatrixWarning, stacklevel=3)


@njit(nogil=True, cache=True)
def _assign_real(a, uf, mm, ii, jj, rows):
    for k in range(ii.shape[0]):
        i, j, r = ii[k], jj[k], rows[k]
        for col in range(uf.shape[0]):
            a[r, col] = mm[i, col] * uf[col, j] - mm[j, col] * uf[col, i]


@njit(nogil=True, cache=True)
def _assign_complex(a, ufr, ufi, mmr, mmi, ii, jj, rows, c, s, half):
    # theta row: Re(m_i u_j - m_j u_i); phi row: -Im((c u_i + s u_j)(c m_i + s m_j))
    for k in range(ii.shape[0]):
        i, j, r = ii[k], jj[k], rows[k]
        ck, sk = c[k], s[k]
        for col in range(ufr.shape[0]):
            uir, uii, ujr, uji = ufr[col, i], ufi[col, i], ufr[col, j], ufi[col, j]
            mir, mii, mjr, mji = mmr[i, col], mmi[i, col], mmr[j, col], mmi[j, col]
            a[r, col] = (mir * ujr - mii * uji) - (mjr * uir - mji * uii)
            wr = ck * uir + sk * ujr
            wi = ck * uii + sk * uji
            zr = ck * mir + sk * mjr
            zi = ck * mii + sk * mji
            a[half + r, col] = -(wr * zi + wi * zr)


def sweep(s: RotationSchedule, cos, sin, phase, u: np.ndarray, gamma_adj: np.ndarray,
          ws: BackwardWorkspace, runner: BlockRunner):
    """Run the reverse block sweep and return ``(d_theta, d_phi)``.

    ``phase`` is None for the real case, in which case ``d_phi`` is None.
    ``gamma_adj`` is the conjugate transpose of the upstream gradient.
    """
    with_phase = phase is not None
    ws.u_fwd[...] = u
    ws.m_mat[...] = gamma_adj
    uf, mm, a = ws.u_fwd, ws.m_mat, ws.a_mat
    half = s.block_size
    d_theta = np.zeros(s.n_params, dtype=a.dtype)
    d_phi = np.zeros(s.n_params, dtype=a.dtype) if with_phase else None

    for blk in reversed(s.index.blocks):
        k = len(blk)
        if not k:
            continue
        ii, jj, slots, f = blk.rows_i, blk.rows_j, blk.slots, blk.flat
        cb, sb = cos[f], sin[f]
        pb = None if phase is None else phase[f]

        def fwd_update(lo, hi):
            rotate_cols_inverse_batch(uf, ii[lo:hi], jj[lo:hi], cb[lo:hi], sb[lo:hi],
                                      None if pb is None else pb[lo:hi])

        def m_update(lo, hi):
            rotate_rows_batch(mm, ii[lo:hi], jj[lo:hi], cb[lo:hi], sb[lo:hi],
                              None if pb is None else pb[lo:hi])

        def assign(lo, hi):
            if with_phase:
                _assign_complex(a, uf.real, uf.imag, mm.real, mm.imag, ii[lo:hi], jj[lo:hi],
                                slots[lo:hi], cb[lo:hi], sb[lo:hi], half)
            else:
                _assign_real(a, uf, mm, ii[lo:hi], jj[lo:hi], slots[lo:hi])

        runner.run(fwd_update, k)
        runner.run(m_update, k)
        runner.run(assign, k)
        rows = np.concatenate([slots, half + slots]) if with_phase else slots
        d = tree_row_sum_parallel(a[rows], runner)
        ws.d_vec[rows] = d
        d_theta[f] = d[:k]
        if with_phase:
            d_phi[f] = d[k:]
    return d_theta, d_phi


def _workspace(s, workspace, dtype, with_phase):
    if workspace is None:
        return BackwardWorkspace.allocate(s, dtype, with_phase)
    if not workspace.fits(s, dtype, with_phase):
        raise ParameterError("workspace does not match the schedule")
    return workspace


def jvp_parallel(s: RotationSchedule, theta, u, gamma, *, workers: int | None = 1,
                 workspace: BackwardWorkspace | None = None, dtype=np.float64) -> np.ndarray:
    """Gradient ``dL/dtheta`` given ``U = forward_parallel(s, theta)`` and ``Gamma = dL/dU``.

    Returns one entry per active pair in canonical order.  Warns with
    :class:`StaleMatrixWarning` when ``u`` is visibly not orthogonal, which
    usually means it was produced from different angles.
    """
    theta = check_angles(s, theta)
    u = _check_square("u", u, s.n, dtype)
    gamma = _check_square("gamma", gamma, s.n, dtype)
    _warn_if_stale(u)
    ws = _workspace(s, workspace, dtype, False)
    c, sn = trig(theta, dtype)
    d_theta, _ = sweep(s, c, sn, None, u, gamma.T, ws, BlockRunner(workers))
    return d_theta


def jvp_sequential(s: RotationSchedule, theta, u, gamma, *, dtype=np.float64) -> np.ndarray:
    """Single-threaded pair-at-a-time gradient; the baseline for benchmarks.

    Visits pairs in reverse sequence order and reduces each with ``np.dot``.
    Valid for any pair ordering, since a pair only reads the two columns of
    ``u_fwd`` and two rows of ``m_mat`` that its own rotation just touched.
    """
    theta = check_angles(s, theta)
    u_fwd = np.array(_check_square("u", u, s.n, dtype), order="F")
    m_mat = np.array(_check_square("gamma", gamma, s.n, dtype).T, order="C")
    c, sn = trig(theta, dtype)
    grad = np.zeros(s.n_params, dtype=dtype)
    for k in reversed(range(s.n_params)):
        i, j = s.index.pairs[k]
        ck, sk = c[k], sn[k]
        ui, uj = u_fwd[:, i].copy(), u_fwd[:, j]
        u_fwd[:, i] = ck * ui - sk * uj
        u_fwd[:, j] = sk * ui + ck * uj
        mi, mj = m_mat[i].copy(), m_mat[j]
        m_mat[i] = ck * mi - sk * mj
        m_mat[j] = sk * mi + ck * mj
        grad[k] = np.dot(m_mat[i], u_fwd[:, j]) - np.dot(m_mat[j], u_fwd[:, i])
    return grad


def jvp_with_reflection(s: RotationSchedule, theta, u_reflected, gamma,
                        cfg: OrthogonalConfig, *, workers: int | None = 1) -> np.ndarray:
    """Gradient when ``U`` was built with ``cfg.reflect``.

    The column flip is a fixed linear map, so its pullback flips the same
    column of ``gamma``; the rotation part is handled by :func:`jvp_parallel`.
    """
    cfg.check(s.n)
    u = _check_square("u_reflected", u_reflected, s.n, np.float64)
    gamma = _check_square("gamma", gamma, s.n, np.float64)
    if not cfg.reflect:
        return jvp_parallel(s, theta, u, gamma, workers=workers)
    col = cfg.reflect_column
    u = u.copy()
    gamma = gamma.copy()
    u[:, col] = -u[:, col]
    gamma[:, col] = -gamma[:, col]
    return jvp_parallel(s, theta, u, gamma, workers=workers)
