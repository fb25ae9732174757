"""Unitary matrices from Givens angles plus per-pair phase factors.

Each rotation on ``(i, j)`` multiplies column ``i`` of the real Givens
matrix by ``exp(1j * phi)``.  Gradients are taken for a real loss, with the
upstream gradient packed as ``Gamma = dL/dRe(U) + 1j * dL/dIm(U)`` so that
``dL/dalpha = sum(Re(conj(Gamma) * dU/dalpha))`` for every angle ``alpha``.
With all phases zero everything reduces to the real code path.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .backward import BackwardWorkspace, _check_square, _warn_if_stale, _workspace, sweep
from .forward import apply_blocks, check_angles
from .kernels import trig, unit_phase
from .parallel import BlockRunner
from .schedule import RotationSchedule


class ComplexGradientResult(NamedTuple):
    d_theta: np.ndarray
    d_phi: np.ndarray


def forward_unitary(s: RotationSchedule, theta, phi, *, workers: int | None = 1) -> np.ndarray:
    """Construct the complex ``U(theta, phi)`` block by block from the identity."""
    theta = check_angles(s, theta)
    phi = check_angles(s, phi, "phi")
    c, sn = trig(theta)
    u = np.eye(s.n, dtype=np.complex128)
    apply_blocks(u, s, c, sn, unit_phase(phi), runner=BlockRunner(workers))
    return u


def jvp_unitary(s: RotationSchedule, theta, phi, u, gamma, *, workers: int | None = 1,
                workspace: BackwardWorkspace | None = None) -> ComplexGradientResult:
    """Gradients of a real loss with respect to both rotation and phase angles.

    ``u`` must come from :func:`forward_unitary` with the same angles.  The
    phase derivative of each pair is rank one,
    ``1j * (c u_i + s u_j)(c v_i + s v_j)^H``, so its contraction with
    ``Gamma`` becomes a second scratch row per pair.  Both row sets go
    through the same reduction pass.
    """
    theta = check_angles(s, theta)
    phi = check_angles(s, phi, "phi")
    u = _check_square("u", u, s.n, np.complex128)
    gamma = _check_square("gamma", gamma, s.n, np.complex128)
    _warn_if_stale(u)
    ws = _workspace(s, workspace, np.complex128, True)
    c, sn = trig(theta)
    d_theta, d_phi = sweep(s, c, sn, unit_phase(phi), u, gamma.conj().T, ws,
                           BlockRunner(workers))
    return ComplexGradientResult(d_theta, d_phi)
