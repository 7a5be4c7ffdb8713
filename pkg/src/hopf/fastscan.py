"""Vectorized enumeration of multi-party process-function candidates.

A candidate table over a fixed shape is identified with an integer: its
entries, packed row-major into single codomain values, form the digits of
the index in base C (row 0 most significant), so ascending index order is
lexicographic table order.  Chunks of candidates are screened against the
unique fixed-point condition with numpy, which is what makes exhausting the
16.7M-table three-party bit space practical on one core.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product
from typing import Iterator

import numpy as np

from .core import (
    FiniteSet,
    InvariantViolation,
    PartySlot,
    ProcessFunctionN,
    TableFunction,
    UfpStatus,
    unpack_index,
)

CHUNK_ROWS = 1 << 18


@dataclass(frozen=True)
class CandidateSpace:
    """Shape of an n-party candidate table: past and future sizes plus the
    per-party action and observation sizes."""

    past: int
    future: int
    act_sizes: tuple[int, ...]
    obs_sizes: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "act_sizes", tuple(self.act_sizes))
        object.__setattr__(self, "obs_sizes", tuple(self.obs_sizes))
        if len(self.act_sizes) != len(self.obs_sizes) or not self.act_sizes:
            raise InvariantViolation("need one (action, observation) size pair per party")
        for size in (self.past, self.future, *self.act_sizes, *self.obs_sizes):
            if size < 1:
                raise InvariantViolation(f"sizes must be >= 1, got {size}")

    @property
    def n(self) -> int:
        return len(self.act_sizes)

    @property
    def rows(self) -> int:
        """Domain size: past times the joint observation count."""
        return self.past * math.prod(self.obs_sizes)

    @property
    def codomain(self) -> int:
        """Packed codomain size: future times the joint action count."""
        return self.future * math.prod(self.act_sizes)

    @property
    def total(self) -> int:
        """Number of candidate tables (arbitrary-precision)."""
        return self.codomain**self.rows

    def digit_dtype(self) -> np.dtype:
        return np.dtype(np.uint8 if self.codomain <= 256 else np.int64)


def candidate_digits(space: CandidateSpace, indices) -> np.ndarray:
    """Base-C digit matrix (batch, rows) of the given candidate indices,
    row 0 in the most significant position."""
    idx = np.asarray(indices, dtype=np.int64)
    digits = np.empty((idx.shape[0], space.rows), dtype=space.digit_dtype())
    c = space.codomain
    work = idx.copy()
    for d in range(space.rows - 1, -1, -1):
        digits[:, d] = work % c
        work //= c
    return digits


def candidate_index(space: CandidateSpace, digits_row: np.ndarray) -> int:
    """Inverse of :func:`candidate_digits` for a single table."""
    index = 0
    for digit in digits_row:
        index = index * space.codomain + int(digit)
    return index


def _act_components(space: CandidateSpace) -> list[np.ndarray]:
    """Per-party action component of every packed codomain value."""
    codes = np.arange(space.codomain, dtype=np.int64)
    joint_acts = math.prod(space.act_sizes)
    acts = codes % joint_acts
    components = []
    stride = joint_acts
    for size in space.act_sizes:
        stride //= size
        components.append((acts // stride) % size)
    return components


def valid_mask(space: CandidateSpace, digits: np.ndarray) -> np.ndarray:
    """Boolean screen of a digit batch against the unique fixed-point
    condition.

    For each past value and each tuple of inserted local functions, the
    predicted joint observation of every row is gathered through a lookup
    table and compared with the row's own observation index; candidates
    survive only if exactly one row agrees.  Tuples in which every local
    function is constant are skipped: a constant system has exactly one
    solution regardless of the table.
    """
    batch = digits.shape[0]
    n_obs = math.prod(space.obs_sizes)
    act_components = _act_components(space)
    row_targets = np.arange(n_obs, dtype=np.int64)
    obs_strides = []
    stride = n_obs
    for size in space.obs_sizes:
        stride //= size
        obs_strides.append(stride)
    # survivors are compacted after every filter pass; most candidates die
    # on the first non-constant function tuple, so later passes see tiny arrays
    alive = np.arange(batch)
    blocks = digits.reshape(batch, space.past, n_obs)
    party_fns = [
        tuple(product(range(o), repeat=a))
        for o, a in zip(space.obs_sizes, space.act_sizes)
    ]
    for fs in product(*party_fns):
        if all(len(set(f)) == 1 for f in fs):
            continue
        predicted = np.zeros(space.codomain, dtype=np.int64)
        for f, comp, stride in zip(fs, act_components, obs_strides):
            predicted += np.asarray(f, dtype=np.int64)[comp] * stride
        for p in range(space.past):
            hits = (predicted[blocks[:, p, :]] == row_targets).sum(axis=1)
            keep = hits == 1
            if not keep.all():
                alive = alive[keep]
                blocks = blocks[keep]
                if alive.size == 0:
                    return np.zeros(batch, dtype=bool)
    ok = np.zeros(batch, dtype=bool)
    ok[alive] = True
    return ok


def iter_valid_indices(
    space: CandidateSpace,
    start: int = 0,
    stop: int | None = None,
    chunk: int = CHUNK_ROWS,
) -> Iterator[int]:
    """Ascending indices of every candidate in [start, stop) that satisfies
    the unique fixed-point condition."""
    total = space.total
    if stop is None or stop > total:
        stop = total
    if stop > 1 << 62:
        raise InvariantViolation(
            "candidate space too large for index-based enumeration; use sampling"
        )
    lo = start
    while lo < stop:
        hi = min(lo + chunk, stop)
        digits = candidate_digits(space, np.arange(lo, hi, dtype=np.int64))
        for offset in np.flatnonzero(valid_mask(space, digits)):
            yield lo + int(offset)
        lo = hi


def sample_digits(
    space: CandidateSpace, rng: np.random.Generator, batch: int
) -> np.ndarray:
    """Uniform candidate tables drawn digit-wise (a uniform index and
    independent uniform digits are the same distribution)."""
    return rng.integers(
        0, space.codomain, size=(batch, space.rows), dtype=np.int64
    ).astype(space.digit_dtype())


def dependence_matrices(space: CandidateSpace, digits: np.ndarray) -> np.ndarray:
    """Boolean (batch, n, n) tensor: entry [b, i, j] says whether candidate
    b's action for party i ever changes when only party j's observation
    varies."""
    batch = digits.shape[0]
    n = space.n
    shaped = digits.reshape(batch, space.past, *space.obs_sizes)
    joint_acts = math.prod(space.act_sizes)
    acts = (shaped % joint_acts).astype(np.int64)
    dep = np.zeros((batch, n, n), dtype=bool)
    stride = joint_acts
    for i, size in enumerate(space.act_sizes):
        stride //= size
        act_i = (acts // stride) % size
        for j in range(n):
            if space.obs_sizes[j] == 1:
                continue
            diffs = np.diff(act_i, axis=2 + j)
            dep[:, i, j] = diffs.reshape(batch, -1).any(axis=1)
    return dep


def order_from_dependence(dep: np.ndarray) -> tuple[int, ...] | None:
    """Greedy causal order for one dependence matrix, or None.

    Greedy placement is complete: whenever some valid order exists, any
    party whose dependencies are already placed can go next and the rest of
    that order remains valid, so getting stuck proves there is no order.
    The lexicographically least placeable party is chosen each round, which
    yields the lexicographically least valid order.
    """
    n = dep.shape[0]
    placed: list[int] = []
    placed_mask = np.zeros(n, dtype=bool)
    for _ in range(n):
        for i in range(n):
            if not placed_mask[i] and not (dep[i] & ~placed_mask).any():
                placed.append(i)
                placed_mask[i] = True
                break
        else:
            return None
    return tuple(placed)


def ordered_mask(space: CandidateSpace, digits: np.ndarray) -> np.ndarray:
    """Boolean screen: which candidates admit some fixed causal order."""
    dep = dependence_matrices(space, digits)
    return np.fromiter(
        (order_from_dependence(d) is not None for d in dep), dtype=bool, count=len(dep)
    )


def build_pf(space: CandidateSpace, digits_row: np.ndarray) -> ProcessFunctionN:
    """Materialize one screened candidate as a validated process function."""
    past = FiniteSet(space.past)
    future = FiniteSet(space.future)
    parties = tuple(
        PartySlot(act=FiniteSet(a), obs=FiniteSet(o))
        for a, o in zip(space.act_sizes, space.obs_sizes)
    )
    codomain_sizes = (space.future, *space.act_sizes)
    entries = tuple(unpack_index(codomain_sizes, int(c)) for c in digits_row)
    table = TableFunction(
        (past, *(slot.obs for slot in parties)),
        (future, *(slot.act for slot in parties)),
        entries,
    )
    return ProcessFunctionN(
        past=past, future=future, parties=parties, table=table, status=UfpStatus.VALID
    )


def pf_digits(space: CandidateSpace, w: ProcessFunctionN) -> np.ndarray:
    """Packed-row representation of an existing process function."""
    codomain_sizes = (space.future, *space.act_sizes)
    strides = [1] * len(codomain_sizes)
    for k in range(len(codomain_sizes) - 2, -1, -1):
        strides[k] = strides[k + 1] * codomain_sizes[k + 1]
    packed = [
        sum(v * st for v, st in zip(entry, strides)) for entry in w.table.entries
    ]
    return np.asarray(packed, dtype=space.digit_dtype())


def _scan_range(args: tuple) -> list[int]:
    space, lo, hi = args
    return list(iter_valid_indices(space, lo, hi))


def scan_valid_indices(
    space: CandidateSpace,
    threads: int = 1,
    start: int = 0,
    stop: int | None = None,
) -> list[int]:
    """All valid candidate indices in [start, stop), optionally sharded
    across worker processes by contiguous index ranges; the ordered merge
    makes the result independent of worker count."""
    total = space.total
    if stop is None or stop > total:
        stop = total
    if threads <= 1 or stop - start <= CHUNK_ROWS:
        return list(iter_valid_indices(space, start, stop))
    import multiprocessing

    shards = []
    width = (stop - start + threads - 1) // threads
    lo = start
    while lo < stop:
        shards.append((space, lo, min(lo + width, stop)))
        lo += width
    with multiprocessing.Pool(threads) as pool:
        parts = pool.map(_scan_range, shards)
    return [idx for part in parts for idx in part]
