"""Bidirectional gated recurrent unit over subtree embeddings, plus the
max-pooling step that produces the final code vector.

The recurrence is the conventional gated cell (update/reset gates, biases
included), run once left-to-right and once right-to-left with zero initial
states; position i of the enhanced sequence is the concatenation of both
directions' states at i, and the code vector is the coordinatewise max
over positions.

Two evaluation paths exist with identical arithmetic: a per-sample path
(``grtu_direction`` / ``encode_sequence`` / ``pool``) and a batched path
(``encode_sequence_rows`` / ``pool_rows``) that advances all samples of a
flat batch one step at a time behind a validity mask, which is what
training and benchmarking use.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyInput, EmptySequence
from .tape import (
    DTYPES,
    Parameter,
    Tensor,
    add,
    add_bias,
    concat,
    hadamard,
    matmul,
    max_over_rows,
    one_minus,
    reshape,
    scale_rows,
    segment_max,
    sigmoid,
    stack_rows,
    take_rows,
    tanh_act,
)
from .grvu import _fan_uniform


@dataclass
class GruDirection:
    W_z: Parameter
    U_z: Parameter
    b_z: Parameter
    W_r: Parameter
    U_r: Parameter
    b_r: Parameter
    W_h: Parameter
    U_h: Parameter
    b_h: Parameter

    def parameters(self) -> list[Parameter]:
        return [
            self.W_z, self.U_z, self.b_z,
            self.W_r, self.U_r, self.b_r,
            self.W_h, self.U_h, self.b_h,
        ]


@dataclass
class GrtuParams:
    """Input (d->m) and recurrent (m->m) weights for both directions."""

    fwd: GruDirection
    bwd: GruDirection

    @property
    def input_dim(self) -> int:
        return self.fwd.W_z.data.shape[0]

    @property
    def hidden_dim(self) -> int:
        return self.fwd.U_z.data.shape[0]

    def parameters(self) -> list[Parameter]:
        return self.fwd.parameters() + self.bwd.parameters()

    @classmethod
    def create(cls, d: int, m: int, rng, dtype="f32") -> "GrtuParams":
        np_dtype = DTYPES[dtype] if isinstance(dtype, str) else dtype

        def direction(tag):
            def mat(name, fan_in, fan_out):
                w = _fan_uniform(rng, fan_in, fan_out, (fan_in, fan_out))
                return Parameter(f"grtu.{tag}.{name}", w, dtype=dtype)

            def vec(name):
                return Parameter(f"grtu.{tag}.{name}", np.zeros(m, dtype=np_dtype))

            return GruDirection(
                W_z=mat("W_z", d, m), U_z=mat("U_z", m, m), b_z=vec("b_z"),
                W_r=mat("W_r", d, m), U_r=mat("U_r", m, m), b_r=vec("b_r"),
                W_h=mat("W_h", d, m), U_h=mat("U_h", m, m), b_h=vec("b_h"),
            )

        return cls(fwd=direction("fwd"), bwd=direction("bwd"))


def gru_cell(x: Tensor, h: Tensor, p: GruDirection) -> Tensor:
    """One recurrence step on (n, d) inputs and (n, m) previous states."""
    z = sigmoid(add_bias(add(matmul(x, p.W_z), matmul(h, p.U_z)), p.b_z))
    r = sigmoid(add_bias(add(matmul(x, p.W_r), matmul(h, p.U_r)), p.b_r))
    c = tanh_act(add_bias(add(matmul(x, p.W_h), matmul(hadamard(r, h), p.U_h)), p.b_h))
    return add(hadamard(z, h), hadamard(one_minus(z), c))


def grtu_direction(O, params: GrtuParams, direction: str):
    """Run one direction over a list of (d,) vectors; returns the list of
    (m,) states aligned to the original positions."""
    if not O:
        raise EmptySequence("empty input sequence")
    if direction not in ("forward", "backward"):
        raise ValueError(f"direction must be forward or backward, got {direction!r}")
    p = params.fwd if direction == "forward" else params.bwd
    d = params.input_dim
    m = params.hidden_dim
    order = range(len(O)) if direction == "forward" else range(len(O) - 1, -1, -1)
    h = Tensor(np.zeros((1, m), dtype=O[0].data.dtype))
    states: dict[int, Tensor] = {}
    for i in order:
        x = reshape(O[i], (1, d))
        h = gru_cell(x, h, p)
        states[i] = reshape(h, (m,))
    return [states[i] for i in range(len(O))]


@dataclass
class EnhancedSequence:
    """Per-position concatenation of forward and backward states."""

    vectors: list[Tensor]

    def __len__(self) -> int:
        return len(self.vectors)


@dataclass
class CodeVector:
    """Final pooled representation plus, for each coordinate, the sequence
    position that supplied it."""

    c: Tensor
    argmax: np.ndarray

    @property
    def dim(self) -> int:
        return self.c.data.shape[0]

    def to_numpy(self) -> np.ndarray:
        return np.array(self.c.data, copy=True)


def encode_sequence(O, params: GrtuParams) -> EnhancedSequence:
    """Bidirectional encoding of a list of (d,) subtree embeddings."""
    if not O:
        raise EmptySequence("empty input sequence")
    fwd = grtu_direction(O, params, "forward")
    bwd = grtu_direction(O, params, "backward")
    return EnhancedSequence(
        vectors=[concat(f, b, axis=0) for f, b in zip(fwd, bwd)]
    )


def pool(V: EnhancedSequence) -> CodeVector:
    """Coordinatewise max over positions."""
    if not V.vectors:
        raise EmptyInput("cannot pool an empty sequence")
    stacked = stack_rows(V.vectors)
    c, arg = max_over_rows(stacked)
    return CodeVector(c=c, argmax=arg)


# ---------------------------------------------------------------------------
# batched path over a flat (sum of lengths, d) matrix


def _step_gather(lengths, offsets, positions):
    """Row indices + validity mask for one step across all samples.
    Invalid samples gather row 0; its contribution is masked out."""
    valid = positions >= 0
    idx = np.where(valid, offsets[:-1] + np.maximum(positions, 0), 0)
    return idx.astype(np.int64), valid.astype(np.float64)


def encode_sequence_rows(flat: Tensor, lengths, params: GrtuParams) -> Tensor:
    """Bidirectional encoding of a flat batch.

    ``flat`` stacks every sample's subtree embeddings sample-major; row
    offsets come from ``lengths``. Returns a (total, 2m) matrix aligned
    with ``flat``. Samples shorter than the current step hold their state
    through a 0/1 mask blend, which is exact in floating point, so the
    result matches the per-sample path.
    """
    lengths = np.asarray(lengths, dtype=np.int64)
    if lengths.size == 0 or (lengths <= 0).any():
        raise EmptySequence("every sample needs at least one position")
    total = int(lengths.sum())
    if flat.data.ndim != 2 or flat.data.shape[0] != total:
        raise EmptyInput(
            f"flat batch has {flat.data.shape} rows, lengths sum to {total}"
        )
    nb = lengths.size
    maxlen = int(lengths.max())
    m = params.hidden_dim
    offsets = np.concatenate([[0], np.cumsum(lengths)])
    dtype = flat.data.dtype

    def run_direction(p: GruDirection, reverse: bool):
        h = Tensor(np.zeros((nb, m), dtype=dtype))
        steps = []
        for t in range(maxlen):
            positions = (lengths - 1 - t) if reverse else np.full(nb, t)
            positions = np.where(positions < lengths, positions, -1)
            idx, mask = _step_gather(lengths, offsets, positions)
            x = take_rows(flat, idx)
            h_new = gru_cell(x, h, p)
            h = add(scale_rows(h_new, mask), scale_rows(h, 1.0 - mask))
            steps.append(h)
        return stack_rows(steps)  # (maxlen * nb, m); step t sample b at t*nb + b

    fwd_stack = run_direction(params.fwd, reverse=False)
    bwd_stack = run_direction(params.bwd, reverse=True)

    # Gather per-(sample, position) rows back into flat order.
    samples = np.repeat(np.arange(nb), lengths)
    positions = np.concatenate([np.arange(n) for n in lengths])
    fwd_rows = positions * nb + samples
    bwd_rows = (lengths[samples] - 1 - positions) * nb + samples
    fwd_flat = take_rows(fwd_stack, fwd_rows)
    bwd_flat = take_rows(bwd_stack, bwd_rows)
    return concat(fwd_flat, bwd_flat, axis=1)


def pool_rows(flat_v: Tensor, lengths):
    """Per-sample coordinatewise max over a flat batch; returns the
    (batch, width) tensor and the argmax provenance rows."""
    lengths = np.asarray(lengths, dtype=np.int64)
    if lengths.size == 0 or (lengths <= 0).any():
        raise EmptyInput("every sample needs at least one position")
    samples = np.repeat(np.arange(lengths.size), lengths)
    return segment_max(flat_v, samples, int(lengths.size))
