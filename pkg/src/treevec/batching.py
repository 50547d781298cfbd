"""Level-synchronous batch evaluation of subtree encoders.

A batch of subtree sequences is flattened into one list of subtrees. All
nodes sitting at the same recursion depth (distance from their own
subtree's root) across the whole flat batch are evaluated in a single
grouped cell call: embeddings are gathered for the level, child states
from the level below are combined per parent with one segmented sum, and
the gate arithmetic runs on the whole level at once. One pass therefore
costs as many grouped invocations as the deepest subtree, regardless of
batch size or level width; per-sample embedding sequences are recovered
afterwards by slicing on the recorded lengths.

Results match the per-subtree sequential encoder (same child summation
order), and the iteration order is fixed everywhere, so a given batch is
bit-stable run to run. Parameters are only read; concurrent calls sharing
them are safe.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .errors import EmptyBatch, EmptySequence, LengthMismatch
from .grvu import GrvuParams, Vocabulary, grvu_cell, rvnn_cell, token_of
from .splitter import StatementSubtree, SubtreeSequence
from .tape import Tensor, segment_sum, take_rows


@dataclass(frozen=True)
class FlatBatch:
    """All subtrees of a batch in (sequence, position) order, plus the
    per-sequence subtree counts needed to undo the flattening."""

    subtrees: tuple[StatementSubtree, ...]
    lengths: tuple[int, ...]


def flatten(batch) -> FlatBatch:
    if not batch:
        raise EmptyBatch("empty batch of sequences")
    subtrees: list[StatementSubtree] = []
    lengths: list[int] = []
    for seq in batch:
        items = seq.items if isinstance(seq, SubtreeSequence) else tuple(seq)
        if not items:
            raise EmptySequence("batch contains an empty subtree sequence")
        lengths.append(len(items))
        subtrees.extend(items)
    return FlatBatch(subtrees=tuple(subtrees), lengths=tuple(lengths))


@dataclass
class LevelPlan:
    """Evaluation schedule: per recursion level, the token row of every
    node at that level and (below level 0) the slot of its parent in the
    previous level."""

    token_indices: list[np.ndarray]
    parent_slots: list[np.ndarray | None]
    subtree_depths: tuple[int, ...]
    subtree_widths: tuple[int, ...]

    @property
    def level_count(self) -> int:
        return len(self.token_indices)

    @property
    def node_evals(self) -> int:
        return int(sum(t.size for t in self.token_indices))


def build_level_plan(flat: FlatBatch, vocab: Vocabulary) -> LevelPlan:
    levels_tok: list[list[int]] = []
    levels_parent: list[list[int]] = []
    depths: list[int] = []
    widths: list[int] = []

    for subtree in flat.subtrees:
        if subtree.is_marker:
            local_levels = [[(vocab.lookup(subtree.label), -1)]]
        else:
            ast = subtree.ast
            local_levels = []
            frontier = [(subtree.root_id, -1)]
            while frontier:
                here = []
                nxt = []
                for nid, parent_slot in frontier:
                    slot = len(here)
                    here.append((vocab.lookup(token_of(ast.node(nid))), parent_slot))
                    for c in subtree.member_children(nid):
                        nxt.append((c, slot))
                local_levels.append(here)
                frontier = nxt
        depths.append(len(local_levels))
        widths.append(max(len(level) for level in local_levels))
        for lvl, entries in enumerate(local_levels):
            if lvl == len(levels_tok):
                levels_tok.append([])
                levels_parent.append([])
            offset = len(levels_tok[lvl - 1]) - len(local_levels[lvl - 1]) if lvl else 0
            for tok, parent_slot in entries:
                levels_tok[lvl].append(tok)
                levels_parent[lvl].append(parent_slot + offset if parent_slot >= 0 else -1)

    token_indices = [np.asarray(toks, dtype=np.int64) for toks in levels_tok]
    parent_slots: list[np.ndarray | None] = [None]
    for lvl in range(1, len(levels_tok)):
        parent_slots.append(np.asarray(levels_parent[lvl], dtype=np.int64))
    return LevelPlan(
        token_indices=token_indices,
        parent_slots=parent_slots,
        subtree_depths=tuple(depths),
        subtree_widths=tuple(widths),
    )


def bottom_up(flat: FlatBatch, vocab: Vocabulary, E, params, plan: LevelPlan | None = None) -> Tensor:
    """Embeddings of every subtree in the flat batch, one row per subtree,
    evaluated level-synchronously from the deepest level upward."""
    if plan is None:
        plan = build_level_plan(flat, vocab)
    cell = grvu_cell if isinstance(params, GrvuParams) else rvnn_cell
    d = params.dim
    states: Tensor | None = None
    for lvl in range(plan.level_count - 1, -1, -1):
        tok = plan.token_indices[lvl]
        x = take_rows(E, tok)
        if states is None:
            child_sum = Tensor(np.zeros((tok.size, d), dtype=E.data.dtype))
        else:
            child_sum = segment_sum(states, plan.parent_slots[lvl + 1], tok.size)
        states = cell(x, child_sum, params)
    return states


def recover(embeddings: Tensor, lengths) -> list[Tensor]:
    """Undo flattening: slice consecutive rows back into per-sample
    embedding sequences."""
    lengths = list(lengths)
    if embeddings.data.shape[0] != sum(lengths):
        raise LengthMismatch(
            f"{embeddings.data.shape[0]} embeddings cannot split into lengths {lengths}"
        )
    out = []
    offset = 0
    for n in lengths:
        out.append(take_rows(embeddings, np.arange(offset, offset + n)))
        offset += n
    return out


@dataclass
class BatchReport:
    batch_size: int
    avg_seq_len: float
    avg_width: float
    avg_depth: float
    level_invocations: int
    node_evals: int
    wall_time_s: float


def run_batched(batch, vocab: Vocabulary, E, params, report: bool = False):
    """flatten -> bottom_up -> recover over a batch of subtree sequences.

    Returns (per-sample lists of subtree embeddings as row matrices,
    BatchReport or None).
    """
    flat = flatten(batch)
    plan = build_level_plan(flat, vocab)
    start = time.perf_counter()
    embeddings = bottom_up(flat, vocab, E, params, plan=plan)
    sequences = recover(embeddings, flat.lengths)
    elapsed = time.perf_counter() - start
    if not report:
        return sequences, None
    return sequences, BatchReport(
        batch_size=len(flat.lengths),
        avg_seq_len=float(np.mean(flat.lengths)),
        avg_width=float(np.mean(plan.subtree_widths)),
        avg_depth=float(np.mean(plan.subtree_depths)),
        level_invocations=plan.level_count,
        node_evals=plan.node_evals,
        wall_time_s=elapsed,
    )
