"""Randomized invariant suite behind ``rrgivens verify``."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import oracles
from .backward import jvp_parallel, jvp_with_reflection
from .forward import OrthogonalConfig, forward_parallel, random_angles
from .parallel import max_workers
from .schedule import ParameterError, active_count, build_circle_schedule
from .unitary import forward_unitary, jvp_unitary

ORTHO_TOL = 1e-12
DET_TOL = 1e-9
JAC_TOL = 1e-10
FD_REL_TOL = 1e-6
FD_FLOOR = 1e-8
FD_STEP = 1e-6
EMBED_TOL = 1e-12
# explicit Jacobians are O(n^5); skip them above this size
JACOBIAN_MAX_N = 8


@dataclass
class CheckOutcome:
    name: str
    value: float
    tol: float

    @property
    def passed(self) -> bool:
        return bool(self.value <= self.tol)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name:<24} max={self.value:.3e}  tol={self.tol:.1e}"


def fd_relative_error(grad, fd, floor: float = FD_FLOOR) -> float:
    """Max ``|grad - fd| / |fd|`` over components with ``|fd| >= floor``."""
    grad, fd = np.asarray(grad), np.asarray(fd)
    mask = np.abs(fd) >= floor
    if not mask.any():
        return float(np.max(np.abs(grad - fd), initial=0.0))
    return float(np.max(np.abs(grad[mask] - fd[mask]) / np.abs(fd[mask])))


def ortho_error(u: np.ndarray) -> float:
    return float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))))


class _Tracker:
    def __init__(self):
        self.worst: dict[str, CheckOutcome] = {}

    def add(self, name: str, value: float, tol: float) -> None:
        prev = self.worst.get(name)
        if prev is None or value > prev.value or np.isnan(value):
            self.worst[name] = CheckOutcome(name, float(value), tol)

    def results(self) -> list[CheckOutcome]:
        return list(self.worst.values())


def run_verification(n: int, trials: int = 20, seed: int = 0, mode: str = "real",
                     m: int | None = None, workers: int | None = None,
                     fd_dtype=np.longdouble) -> list[CheckOutcome]:
    """Run the invariant checks on ``trials`` random draws.

    ``mode`` is ``real``, ``restricted`` or ``unitary``.  A ``real`` run with
    ``m < n`` is treated as ``restricted``.  Each check reports the worst
    value seen over all draws.
    """
    if trials < 1:
        raise ParameterError("trials must be >= 1")
    if mode not in ("real", "restricted", "unitary"):
        raise ParameterError(f"unknown mode {mode!r}")
    if mode == "restricted" and m is None:
        m = max(1, n // 2)
    s = build_circle_schedule(n, m_active=m)
    many = max_workers() if workers is None else workers
    rng = np.random.default_rng(seed)
    track = _Tracker()
    pairs = oracles.active_sequence(s)

    track.add("param_count", abs(s.n_params - active_count(n, s.m_active)), 0)
    for _ in range(trials):
        theta = random_angles(s, rng)
        if mode == "unitary":
            phi = random_angles(s, rng)
            gamma = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
            u = forward_unitary(s, theta, phi)
            track.add("unitarity", ortho_error(u), ORTHO_TOL)
            seq = oracles.forward_sequential(pairs, theta, n, phi)
            track.add("oracle_equality", float(np.max(np.abs(u - seq))), 0.0)
            u_many = forward_unitary(s, theta, phi, workers=many)
            res = jvp_unitary(s, theta, phi, u, gamma)
            res_many = jvp_unitary(s, theta, phi, u_many, gamma, workers=many)
            track.add("worker_independence", float(
                not (np.array_equal(u, u_many) and np.array_equal(res.d_theta, res_many.d_theta)
                     and np.array_equal(res.d_phi, res_many.d_phi))), 0.0)
            loss = oracles.linear_loss(gamma)
            for wrt, got in (("theta", res.d_theta), ("phi", res.d_phi)):
                fd = oracles.finite_diff_gradient(s, theta, loss, FD_STEP, phi, wrt, fd_dtype)
                track.add(f"gradient_fd_{wrt}", fd_relative_error(got, fd), FD_REL_TOL)
            if n <= JACOBIAN_MAX_N:
                track.add("jacobian_oracle", float(np.max(np.abs(
                    res.d_theta - oracles.jvp_explicit(s, theta, gamma, phi)))), JAC_TOL)
            zero = np.zeros_like(phi)
            u0 = forward_unitary(s, theta, zero)
            real_u = forward_parallel(s, theta)
            real_g = gamma.real
            g0 = jvp_unitary(s, theta, zero, u0, real_g.astype(complex)).d_theta
            track.add("real_embedding", max(float(np.max(np.abs(u0 - real_u))), float(
                np.max(np.abs(g0 - jvp_parallel(s, theta, real_u, real_g))))), EMBED_TOL)
            continue

        gamma = rng.standard_normal((n, n))
        u = forward_parallel(s, theta)
        track.add("orthogonality", ortho_error(u), ORTHO_TOL)
        track.add("determinant", abs(np.linalg.det(u) - 1.0), DET_TOL)
        seq = oracles.forward_sequential(pairs, theta, n)
        track.add("oracle_equality", float(np.max(np.abs(u - seq))), 0.0)
        grad = jvp_parallel(s, theta, u, gamma)
        u_many = forward_parallel(s, theta, workers=many)
        grad_many = jvp_parallel(s, theta, u_many, gamma, workers=many)
        track.add("worker_independence", float(
            not (np.array_equal(u, u_many) and np.array_equal(grad, grad_many))), 0.0)
        if n <= JACOBIAN_MAX_N:
            track.add("jacobian_oracle", float(np.max(np.abs(
                grad - oracles.jvp_explicit(s, theta, gamma)))), JAC_TOL)
        fd = oracles.finite_diff_gradient(s, theta, oracles.linear_loss(gamma), FD_STEP,
                                          dtype=fd_dtype)
        track.add("gradient_fd", fd_relative_error(grad, fd), FD_REL_TOL)

        cfg = OrthogonalConfig(reflect=True, reflect_column=int(rng.integers(n)))
        ur = forward_parallel(s, theta, cfg)
        track.add("determinant_reflected", abs(np.linalg.det(ur) + 1.0), DET_TOL)
        col = cfg.reflect_column

        def reflected_loss(mat, gamma=gamma, col=col):
            mat = mat.copy()
            mat[:, col] = -mat[:, col]
            return np.sum(gamma * mat)

        gr = jvp_with_reflection(s, theta, ur, gamma, cfg)
        fdr = oracles.finite_diff_gradient(s, theta, reflected_loss, FD_STEP, dtype=fd_dtype)
        track.add("gradient_fd_reflected", fd_relative_error(gr, fdr), FD_REL_TOL)
    return track.results()
