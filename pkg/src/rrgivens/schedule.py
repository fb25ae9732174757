"""Round-robin coordinate-pair schedules built with the circle method.

A schedule partitions every pair ``(i, j)`` with ``i < j`` of ``n_effective``
coordinates into ``n_effective - 1`` blocks of ``n_effective / 2`` pairs such
that no two pairs in a block share a coordinate.  Rotations inside a block
commute, so a block can be applied in one parallel step.

Odd ``n`` is handled by appending a phantom coordinate ``n``; pairs touching
it stay in the block structure but are inactive.  A restriction bound
``m_active < n`` additionally deactivates every pair with ``i >= m_active``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, NamedTuple, Sequence

import numpy as np


class ParameterError(ValueError):
    """Raised for invalid dimensions, permutations, indices or lengths."""


class CoordinatePair(NamedTuple):
    i: int
    j: int


def active_count(n: int, m: int) -> int:
    """Number of free angles when pairs inside ``{m, ..., n-1}`` are excluded."""
    return m * n - m * (m + 1) // 2


@dataclass(frozen=True)
class BlockIndex:
    """Index arrays of the active pairs of one block, in slot order."""

    rows_i: np.ndarray
    rows_j: np.ndarray
    slots: np.ndarray
    flat: np.ndarray

    def __len__(self) -> int:
        return len(self.flat)


@dataclass(frozen=True)
class RotationSchedule:
    n: int
    n_effective: int
    blocks: tuple[tuple[CoordinatePair, ...], ...]
    m_active: int
    initial_permutation: tuple[int, ...]

    def is_active(self, pair: Sequence[int]) -> bool:
        i, j = pair
        return i < self.m_active and j < self.n

    @property
    def block_size(self) -> int:
        return self.n_effective // 2

    @cached_property
    def index(self) -> PairIndexMap:
        return pair_index_map(self)

    @property
    def n_params(self) -> int:
        return len(self.index)

    def active_pairs(self) -> list[CoordinatePair]:
        """Active pairs in canonical (block-major) parameter order."""
        return list(self.index.pairs)

    def to_text(self, mark_inactive: bool = True) -> str:
        """One block per line, pairs written ``i-j``; inactive pairs get ``*``."""
        lines = []
        for block in self.blocks:
            tokens = []
            for p in block:
                tok = f"{p.i}-{p.j}"
                if mark_inactive and not self.is_active(p):
                    tok += "*"
                tokens.append(tok)
            lines.append(" ".join(tokens))
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class PairIndexMap:
    """Maps active pairs to their block position and flat parameter index.

    Flat indices run block-major: every active pair of block 0 in slot
    order, then block 1, and so on.  Inactive pairs have no flat index.
    """

    position: dict[CoordinatePair, tuple[int, int]]
    flat: dict[CoordinatePair, int]
    pairs: tuple[CoordinatePair, ...]
    blocks: tuple[BlockIndex, ...] = field(repr=False)

    def __len__(self) -> int:
        return len(self.pairs)

    def __contains__(self, pair) -> bool:
        return CoordinatePair(*pair) in self.flat

    def flat_index(self, pair: Sequence[int]) -> int | None:
        return self.flat.get(CoordinatePair(*pair))


def _check_permutation(perm: Sequence[int], size: int) -> tuple[int, ...]:
    perm = tuple(int(p) for p in perm)
    if len(perm) != size:
        raise ParameterError(
            f"initial permutation has length {len(perm)}, expected {size}")
    if sorted(perm) != list(range(size)):
        raise ParameterError(
            f"initial permutation is not a permutation of 0..{size - 1}")
    return perm


def _pairs_of(seq: Sequence[int]) -> tuple[CoordinatePair, ...]:
    size = len(seq)
    out = []
    for slot in range(size // 2):
        a, b = seq[slot], seq[size - 1 - slot]
        out.append(CoordinatePair(min(a, b), max(a, b)))
    return tuple(out)


def build_circle_schedule(n: int, initial_permutation: Sequence[int] | None = None,
                          m_active: int | None = None) -> RotationSchedule:
    """Build the round-robin schedule for dimension ``n`` by the circle method.

    The first block pairs entries of the seed sequence at equal distance from
    the two ends.  Each following block comes from holding the first entry
    fixed and cyclically shifting the remaining ``n_effective - 1`` entries
    one place to the right.

    Args:
        n: logical matrix dimension, at least 2.
        initial_permutation: seed ordering of ``0..n_effective-1``; the
            identity when omitted.
        m_active: restriction bound in ``[1, n]``; defaults to ``n``.

    Raises:
        ParameterError: for ``n < 2``, an out-of-range ``m_active`` or a seed
            that is not a permutation of the right length.
    """
    if isinstance(n, bool) or int(n) != n or n < 2:
        raise ParameterError(f"dimension must be an integer >= 2, got {n!r}")
    n = int(n)
    n_eff = n + (n % 2)
    m = n if m_active is None else int(m_active)
    if not 1 <= m <= n:
        raise ParameterError(f"m_active must lie in [1, {n}], got {m_active!r}")
    if initial_permutation is None:
        perm = tuple(range(n_eff))
    else:
        perm = _check_permutation(initial_permutation, n_eff)

    fixed, rest = perm[0], list(perm[1:])
    blocks = []
    for _ in range(n_eff - 1):
        blocks.append(_pairs_of([fixed] + rest))
        rest = rest[-1:] + rest[:-1]
    return RotationSchedule(n=n, n_effective=n_eff, blocks=tuple(blocks),
                            m_active=m, initial_permutation=perm)


def circle_pair(n_effective: int, initial_permutation: Sequence[int],
                step: int, slot: int) -> CoordinatePair:
    """Pair at ``(step, slot)`` derived directly, without materializing blocks.

    Matches ``build_circle_schedule(...).blocks[step][slot]``.
    """
    ring = n_effective - 1

    def at(pos: int) -> int:
        if pos == 0:
            return initial_permutation[0]
        return initial_permutation[1 + (pos - 1 - step) % ring]

    a, b = at(slot), at(n_effective - 1 - slot)
    return CoordinatePair(min(a, b), max(a, b))


def pair_index_map(s: RotationSchedule) -> PairIndexMap:
    position, flat, pairs, blocks = {}, {}, [], []
    for b, block in enumerate(s.blocks):
        ii, jj, slots, idx = [], [], [], []
        for slot, p in enumerate(block):
            position[p] = (b, slot)
            if not s.is_active(p):
                continue
            flat[p] = len(pairs)
            ii.append(p.i)
            jj.append(p.j)
            slots.append(slot)
            idx.append(len(pairs))
            pairs.append(p)
        blocks.append(BlockIndex(np.array(ii, dtype=np.intp), np.array(jj, dtype=np.intp),
                                 np.array(slots, dtype=np.intp), np.array(idx, dtype=np.intp)))
    active_pos = {p: position[p] for p in pairs}
    return PairIndexMap(position=active_pos, flat=flat, pairs=tuple(pairs),
                        blocks=tuple(blocks))


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class ValidationReport:
    checks: list[CheckResult]

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[CheckResult]:
        return [c for c in self.checks if not c.passed]

    def __str__(self) -> str:
        return "\n".join(
            f"{'PASS' if c.passed else 'FAIL'} {c.name}" + (f": {c.detail}" if c.detail else "")
            for c in self.checks)


def validate_schedule(s: RotationSchedule) -> ValidationReport:
    """Check block count, block sizes, within-block disjointness and exact cover.

    Failures are reported, never raised.
    """
    n_eff = s.n_effective
    checks = []

    nb = len(s.blocks)
    checks.append(CheckResult("block_count", nb == n_eff - 1,
                              "" if nb == n_eff - 1 else f"{nb} blocks, expected {n_eff - 1}"))

    bad_sizes = [b for b, blk in enumerate(s.blocks) if len(blk) != n_eff // 2]
    checks.append(CheckResult("block_size", not bad_sizes,
                              f"blocks {bad_sizes} do not hold {n_eff // 2} pairs" if bad_sizes else ""))

    clashes = []
    for b, blk in enumerate(s.blocks):
        seen: dict[int, tuple] = {}
        for p in blk:
            for c in p:
                if c in seen:
                    clashes.append(f"block {b}: coordinate {c} in {tuple(seen[c])} and {tuple(p)}")
                seen[c] = p
    checks.append(CheckResult("disjoint", not clashes, "; ".join(clashes)))

    counts: dict[tuple[int, int], int] = {}
    malformed = []
    for blk in s.blocks:
        for p in blk:
            i, j = p
            if not 0 <= i < j < n_eff:
                malformed.append((i, j))
            counts[(i, j)] = counts.get((i, j), 0) + 1
    expected = {(i, j) for i in range(n_eff) for j in range(i + 1, n_eff)}
    missing = sorted(expected - counts.keys())
    repeated = sorted(p for p, c in counts.items() if c > 1)
    detail = []
    if missing:
        detail.append("missing " + ", ".join(f"({i},{j})" for i, j in missing))
    if repeated:
        detail.append("repeated " + ", ".join(f"({i},{j})" for i, j in repeated))
    if malformed:
        detail.append("malformed " + ", ".join(f"({i},{j})" for i, j in malformed))
    checks.append(CheckResult("exact_cover", not detail, "; ".join(detail)))
    return ValidationReport(checks)


def parse_schedule_text(text: str, n: int, m_active: int | None = None) -> RotationSchedule:
    """Inverse of :meth:`RotationSchedule.to_text` (trailing ``*`` marks are ignored)."""
    blocks = []
    for line in text.strip().splitlines():
        block = []
        for tok in line.split():
            i, j = tok.rstrip("*").split("-")
            block.append(CoordinatePair(int(i), int(j)))
        blocks.append(tuple(block))
    n_eff = n + (n % 2)
    return RotationSchedule(n=n, n_effective=n_eff, blocks=tuple(blocks),
                            m_active=n if m_active is None else m_active,
                            initial_permutation=tuple(range(n_eff)))


def iter_pairs(s: RotationSchedule) -> Iterable[CoordinatePair]:
    """All scheduled pairs (active or not) in block-major order."""
    for block in s.blocks:
        yield from block
