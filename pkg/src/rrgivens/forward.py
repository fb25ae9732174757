"""Block-parallel construction of orthogonal matrices from Givens angles."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernels import rotate_rows_batch, trig
from .parallel import BlockRunner
from .schedule import ParameterError, RotationSchedule


@dataclass(frozen=True)
class OrthogonalConfig:
    """Optional reflection: negate ``reflect_column`` after the rotations (det -1)."""

    reflect: bool = False
    reflect_column: int = 0

    def check(self, n: int) -> None:
        if not 0 <= self.reflect_column < n:
            raise ParameterError(f"reflect_column {self.reflect_column} out of range for n={n}")


def check_angles(s: RotationSchedule, values, name: str = "theta") -> np.ndarray:
    """Return ``values`` as a float64 vector after checking it matches ``s``."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1 or arr.shape[0] != s.n_params:
        raise ParameterError(
            f"{name} has shape {arr.shape}, schedule needs {s.n_params} angles")
    return arr


def random_angles(s: RotationSchedule, rng: np.random.Generator) -> np.ndarray:
    """Angles drawn uniformly from (-pi, pi), one per active pair."""
    return rng.uniform(-np.pi, np.pi, size=s.n_params)


def apply_blocks(mat: np.ndarray, s: RotationSchedule, cos, sin, phase=None,
                 runner: BlockRunner | None = None) -> None:
    """Left-multiply ``mat`` by every block rotation, last block first."""
    runner = runner or BlockRunner(1)
    for blk in reversed(s.index.blocks):
        if not len(blk):
            continue
        ii, jj, f = blk.rows_i, blk.rows_j, blk.flat
        cb, sb = cos[f], sin[f]
        pb = None if phase is None else phase[f]

        def work(lo, hi, ii=ii, jj=jj, cb=cb, sb=sb, pb=pb):
            rotate_rows_batch(mat, ii[lo:hi], jj[lo:hi], cb[lo:hi], sb[lo:hi],
                              None if pb is None else pb[lo:hi])

        runner.run(work, len(blk))


def forward_parallel(s: RotationSchedule, theta, cfg: OrthogonalConfig | None = None, *,
                     workers: int | None = 1, dtype=np.float64) -> np.ndarray:
    """Construct ``U(theta)`` starting from the identity, one parallel step per block.

    Blocks are applied in reverse schedule order, so the first block is the
    leftmost factor of the product.  Phantom and restricted pairs are skipped.
    The result does not depend on ``workers``.  ``dtype=np.float32`` exists
    for benchmarking; tolerances elsewhere assume float64.

    Angles are not range-reduced, so values differing by 2*pi give the same
    matrix.
    """
    cfg = cfg or OrthogonalConfig()
    cfg.check(s.n)
    theta = check_angles(s, theta)
    c, sn = trig(theta, dtype)
    u = np.eye(s.n, dtype=dtype)
    apply_blocks(u, s, c, sn, runner=BlockRunner(workers))
    if cfg.reflect:
        u[:, cfg.reflect_column] = -u[:, cfg.reflect_column]
    return u


def forward_restricted(s: RotationSchedule, theta, cfg: OrthogonalConfig | None = None, *,
                       workers: int | None = 1, dtype=np.float64) -> np.ndarray:
    """:func:`forward_parallel` for a schedule with ``m_active < n``.

    ``theta`` holds only the ``m*n - m*(m+1)/2`` free angles.  Pairs with
    ``i >= m_active`` are bypassed inside the block loop, which costs no
    extra arithmetic over the sequential product.
    """
    return forward_parallel(s, theta, cfg, workers=workers, dtype=dtype)


def forward_serial(s: RotationSchedule, theta, cfg: OrthogonalConfig | None = None, *,
                   dtype=np.float64) -> np.ndarray:
    """Single-threaded pair-at-a-time construction; the benchmark baseline.

    Applies the rotations one pair at a time in reverse sequence order with
    two preallocated scratch rows.  Bitwise equal to :func:`forward_parallel`.
    """
    cfg = cfg or OrthogonalConfig()
    cfg.check(s.n)
    theta = check_angles(s, theta)
    c, sn = trig(theta, dtype)
    u = np.eye(s.n, dtype=dtype)
    ri = np.empty(s.n, dtype=dtype)
    rj = np.empty(s.n, dtype=dtype)
    tmp = np.empty(s.n, dtype=dtype)
    pairs = s.index.pairs
    for k in range(len(pairs) - 1, -1, -1):
        i, j = pairs[k]
        ui, uj = u[i], u[j]
        ck, sk = c[k], sn[k]
        np.multiply(ck, ui, out=ri)
        np.multiply(sk, uj, out=tmp)
        np.subtract(ri, tmp, out=ri)
        np.multiply(sk, ui, out=rj)
        np.multiply(ck, uj, out=tmp)
        np.add(rj, tmp, out=rj)
        ui[...] = ri
        uj[...] = rj
    if cfg.reflect:
        u[:, cfg.reflect_column] = -u[:, cfg.reflect_column]
    return u
