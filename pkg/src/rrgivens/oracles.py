"""Slow reference implementations used as ground truth in tests.

Nothing here calls the fast kernels.  The sequential forward is a plain
per-pair loop with scalar ``math`` trigonometry, the Jacobian columns are
built from explicit dense Givens matrices, and gradients are checked with
central differences.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .schedule import CoordinatePair, ParameterError, RotationSchedule


@dataclass
class JacobianColumn:
    pair: CoordinatePair
    matrix: np.ndarray


def active_sequence(s: RotationSchedule) -> list[CoordinatePair]:
    """The active pairs of ``s`` flattened block by block (the sequence E)."""
    return [p for block in s.blocks for p in block if s.is_active(p)]


def _trig_pair(t, dtype):
    if dtype == np.float64:
        return math.cos(t), math.sin(t)
    t = dtype(t)
    return np.cos(t), np.sin(t)


def forward_sequential(pairs: Sequence[Sequence[int]], theta, n: int, phi=None,
                       dtype=np.float64) -> np.ndarray:
    """Apply one rotation per pair to the identity, last pair first.

    ``dtype=np.longdouble`` runs the whole product (trigonometry included)
    in extended precision.
    """
    dtype = np.dtype(dtype).type
    theta = np.asarray(theta, dtype=dtype)
    if len(theta) != len(pairs):
        raise ParameterError(f"{len(theta)} angles for {len(pairs)} pairs")
    if phi is not None:
        phi = np.asarray(phi, dtype=dtype)
        if len(phi) != len(pairs):
            raise ParameterError(f"{len(phi)} phases for {len(pairs)} pairs")
    if phi is None:
        u = np.eye(n, dtype=dtype)
        for k in reversed(range(len(pairs))):
            i, j = pairs[k]
            c, s = _trig_pair(theta[k], dtype)
            ri = c * u[i] - s * u[j]
            rj = s * u[i] + c * u[j]
            u[i] = ri
            u[j] = rj
        return u
    # complex rows kept as separate real and imaginary parts, so every
    # product below is a plain real multiply
    re = np.eye(n, dtype=dtype)
    im = np.zeros((n, n), dtype=dtype)
    for k in reversed(range(len(pairs))):
        i, j = pairs[k]
        c, s = _trig_pair(theta[k], dtype)
        pc, ps = _trig_pair(phi[k], dtype)
        ar, ai, br, bi = pc * c, ps * c, pc * s, ps * s
        xr, xi, yr, yi = re[i].copy(), im[i].copy(), re[j].copy(), im[j].copy()
        re[i] = (ar * xr - ai * xi) - s * yr
        im[i] = (ar * xi + ai * xr) - s * yi
        re[j] = (br * xr - bi * xi) + c * yr
        im[j] = (br * xi + bi * xr) + c * yi
    u = np.empty((n, n), dtype=np.result_type(dtype, np.complex64))
    u.real = re
    u.imag = im
    return u


def givens_matrix(n: int, i: int, j: int, theta: float, phi: float | None = None) -> np.ndarray:
    ph = 1.0 if phi is None else np.exp(1j * phi)
    g = np.eye(n, dtype=np.float64 if phi is None else np.complex128)
    g[i, i] = ph * np.cos(theta)
    g[j, j] = np.cos(theta)
    g[i, j] = -np.sin(theta)
    g[j, i] = ph * np.sin(theta)
    return g


def givens_derivative(n: int, i: int, j: int, theta: float, phi: float | None = None,
                      wrt: str = "theta") -> np.ndarray:
    """Entrywise derivative of :func:`givens_matrix` (zero outside the 2x2 block)."""
    cplx = phi is not None
    ph = np.exp(1j * phi) if cplx else 1.0
    d = np.zeros((n, n), dtype=np.complex128 if cplx else np.float64)
    c, s = np.cos(theta), np.sin(theta)
    if wrt == "theta":
        d[i, i] = -ph * s
        d[j, j] = -s
        d[i, j] = -c
        d[j, i] = ph * c
    elif wrt == "phi":
        if not cplx:
            raise ParameterError("phase derivative needs phi")
        d[i, i] = 1j * ph * c
        d[j, i] = 1j * ph * s
    else:
        raise ParameterError(f"unknown derivative variable {wrt!r}")
    return d


def _block_matrices(s: RotationSchedule, theta, phi):
    flat = {p: k for k, p in enumerate(active_sequence(s))}
    mats = []
    for block in s.blocks:
        g = np.eye(s.n, dtype=np.float64 if phi is None else np.complex128)
        for p in block:
            if p in flat:
                k = flat[p]
                g = g @ givens_matrix(s.n, p.i, p.j, theta[k], None if phi is None else phi[k])
        mats.append(g)
    return mats, flat


def forward_dense(s: RotationSchedule, theta, phi=None) -> np.ndarray:
    """``U`` as the explicit product of dense Givens matrices in sequence order."""
    mats, _ = _block_matrices(s, theta, phi)
    u = np.eye(s.n, dtype=mats[0].dtype)
    for g in mats:
        u = u @ g
    return u


def jacobian_column(s: RotationSchedule, theta, e: Sequence[int], phi=None,
                    wrt: str = "theta") -> JacobianColumn:
    """Materialize ``dU/dtheta_e`` (or ``dU/dphi_e``) as a dense matrix.

    Uses ``prefix @ D G^{e,H} @ suffix`` where the prefix covers blocks
    before the one holding ``e`` and the suffix covers that block onward.
    """
    e = CoordinatePair(*e)
    mats, flat = _block_matrices(s, theta, phi)
    if e not in flat:
        raise ParameterError(f"pair {tuple(e)} is not an active parameter")
    k = flat[e]
    b = next(idx for idx, block in enumerate(s.blocks) if e in block)
    ph = None if phi is None else phi[k]
    g = givens_matrix(s.n, e.i, e.j, theta[k], ph)
    dg = givens_derivative(s.n, e.i, e.j, theta[k], ph, wrt)
    q = dg @ g.conj().T
    prefix = np.eye(s.n, dtype=g.dtype)
    for m in mats[:b]:
        prefix = prefix @ m
    suffix = np.eye(s.n, dtype=g.dtype)
    for m in mats[b:]:
        suffix = suffix @ m
    return JacobianColumn(e, prefix @ q @ suffix)


def jacobian(s: RotationSchedule, theta, phi=None, wrt: str = "theta") -> np.ndarray:
    """Full ``n^2 x N`` Jacobian, ``U`` flattened row-major."""
    cols = [jacobian_column(s, theta, p, phi, wrt).matrix.ravel()
            for p in active_sequence(s)]
    return np.stack(cols, axis=1)


def jvp_explicit(s: RotationSchedule, theta, gamma, phi=None, wrt: str = "theta") -> np.ndarray:
    """Contract the explicit Jacobian with ``gamma``: ``Re(J^T conj(vec(gamma)))``."""
    jac = jacobian(s, theta, phi, wrt)
    g = np.asarray(gamma).ravel()
    return np.real(jac.T @ np.conj(g))


def forward_sequential_stack(pairs: Sequence[Sequence[int]], thetas, n: int, phis=None,
                             dtype=np.float64) -> np.ndarray:
    """:func:`forward_sequential` for a stack of angle vectors, shape ``(B, N)``.

    Returns ``(B, n, n)``.  Same pair-by-pair recursion, vectorized over the
    stack only.
    """
    thetas = np.asarray(thetas, dtype=dtype)
    if thetas.ndim != 2 or thetas.shape[1] != len(pairs):
        raise ParameterError(f"angle stack has shape {thetas.shape} for {len(pairs)} pairs")
    cos, sin = np.cos(thetas), np.sin(thetas)
    if phis is None:
        a_all, b_all = cos, sin
        out_dtype = dtype
    else:
        phis = np.asarray(phis, dtype=dtype)
        if phis.shape != thetas.shape:
            raise ParameterError("phase stack does not match angle stack")
        out_dtype = np.result_type(dtype, np.complex64)
        ph = np.empty(phis.shape, dtype=out_dtype)
        ph.real = np.cos(phis)
        ph.imag = np.sin(phis)
        a_all, b_all = ph * cos, ph * sin
    u = np.broadcast_to(np.eye(n, dtype=out_dtype), (len(thetas), n, n)).copy()
    for k in reversed(range(len(pairs))):
        i, j = pairs[k]
        a, b = a_all[:, k, None], b_all[:, k, None]
        c, s = cos[:, k, None], sin[:, k, None]
        ri = a * u[:, i] - s * u[:, j]
        rj = b * u[:, i] + c * u[:, j]
        u[:, i] = ri
        u[:, j] = rj
    return u


def finite_diff_gradient(s: RotationSchedule, theta, loss: Callable[[np.ndarray], float],
                         h: float = 1e-6, phi=None, wrt: str = "theta",
                         dtype=np.float64, chunk: int = 256) -> np.ndarray:
    """Central differences of ``loss(U(theta[, phi]))`` over every active angle.

    In float64 the rounding noise of the difference grows roughly like
    ``n * eps / h``; around n = 64 it reaches 1e-8 absolute.  Pass
    ``dtype=np.longdouble`` to evaluate ``U`` and the loss in extended
    precision when small components must be resolved to tight relative
    accuracy.
    """
    if not h > 0:
        raise ParameterError("step must be positive")
    if wrt not in ("theta", "phi"):
        raise ParameterError(f"unknown derivative variable {wrt!r}")
    if wrt == "phi" and phi is None:
        raise ParameterError("phase derivative needs phi")
    pairs = active_sequence(s)
    npar = len(pairs)
    theta = np.asarray(theta, dtype=dtype)
    phi = None if phi is None else np.asarray(phi, dtype=dtype)
    if theta.shape != (npar,) or (phi is not None and phi.shape != (npar,)):
        raise ParameterError(f"schedule has {npar} active pairs")
    base = theta if wrt == "theta" else phi
    # rows 2k and 2k+1 perturb angle k up and down
    stack = np.repeat(base[None, :], 2 * npar, axis=0)
    idx = np.arange(npar)
    stack[2 * idx, idx] += dtype(h)
    stack[2 * idx + 1, idx] -= dtype(h)
    steps = stack[2 * idx, idx] - stack[2 * idx + 1, idx]
    values = np.empty(2 * npar, dtype=dtype)
    for lo in range(0, 2 * npar, chunk):
        part = stack[lo:lo + chunk]
        other = None if phi is None else np.repeat(
            (phi if wrt == "theta" else theta)[None, :], len(part), axis=0)
        if wrt == "theta":
            mats = forward_sequential_stack(pairs, part, s.n, other, dtype)
        else:
            mats = forward_sequential_stack(pairs, other, s.n, part, dtype)
        for r, m in enumerate(mats):
            values[lo + r] = loss(m)
    return ((values[0::2] - values[1::2]) / steps).astype(np.float64)


def numerical_rank(mat: np.ndarray, rtol: float = 1e-10) -> int:
    sv = np.linalg.svd(mat, compute_uv=False)
    if sv.size == 0 or sv[0] == 0:
        return 0
    return int(np.sum(sv > rtol * sv[0]))


def linear_loss(gamma: np.ndarray) -> Callable[[np.ndarray], float]:
    """``L(U) = sum(Re(conj(gamma) * U))``; its gradient with respect to U is ``gamma``."""
    gamma = np.asarray(gamma)

    def loss(u):
        g = gamma.astype(np.result_type(gamma, u), copy=False)
        return np.sum(np.real(np.conj(g) * u))

    return loss
