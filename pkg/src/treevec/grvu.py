"""Gated recursive unit over statement subtrees.

Each subtree node j gets a hidden state computed bottom-up from its
children's states h_k and its own token embedding x_j:

    z = sigmoid(x U_z + (sum_k h_k) W_z)          update gate
    r = sigmoid(x U_r + (sum_k h_k) W_r)          reset gate
    c = tanh(x U_h + (r * sum_k h_k) W_h)         candidate state
    h = z * sum_k h_k + (1 - z) * c

Child states enter only through their unweighted sum, so the cell is
invariant to child order. There are no bias terms unless explicitly
enabled. The subtree embedding is the root's hidden state.

The ungated baseline cell h = sigmoid(x W + sum_k h_k + b) is provided for
gradient-decay comparisons.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, EmptySequence
from .splitter import StatementSubtree, SubtreeSequence
from .tape import (
    DTYPES,
    Parameter,
    Tensor,
    add,
    add_bias,
    backward,
    hadamard,
    matmul,
    one_minus,
    reshape,
    sigmoid,
    sum_all,
    take_rows,
    tanh_act,
)

UNK_TOKEN = "<unk>"


def token_of(node) -> str:
    """Token string embedded for an AST node: kind alone, or kind:text."""
    return node.kind if node.text is None else f"{node.kind}:{node.text}"


def subtree_tokens(subtree: StatementSubtree) -> list[str]:
    """Preorder token stream of a subtree; markers embed as their label."""
    if subtree.is_marker:
        return [subtree.label]
    ast = subtree.ast
    return [token_of(ast.node(i)) for i in subtree.member_ids]


@dataclass
class Vocabulary:
    token_to_index: dict[str, int]
    tokens: list[str]
    unk_index: int = 0

    @property
    def size(self) -> int:
        return len(self.tokens)

    def lookup(self, token: str) -> int:
        return self.token_to_index.get(token, self.unk_index)

    @classmethod
    def build(cls, token_streams) -> "Vocabulary":
        """Vocabulary over an iterable of token lists, index 0 reserved for
        unknowns, remaining indices in first-seen order."""
        tokens = [UNK_TOKEN]
        index = {UNK_TOKEN: 0}
        for stream in token_streams:
            for tok in stream:
                if tok not in index:
                    index[tok] = len(tokens)
                    tokens.append(tok)
        return cls(token_to_index=index, tokens=tokens)

    @classmethod
    def from_sequences(cls, sequences) -> "Vocabulary":
        return cls.build(
            subtree_tokens(st) for seq in sequences for st in seq.items
        )


def init_embeddings(vocab: Vocabulary, dim: int, rng, dtype="f32", sigma=0.1) -> Parameter:
    table = rng.normal(0.0, sigma, size=(vocab.size, dim))
    return Parameter("embeddings", table, dtype=dtype)


def embed_token(node, vocab: Vocabulary, E) -> Tensor:
    """Embedding row for one AST node (unknown tokens map to row 0)."""
    idx = vocab.lookup(token_of(node))
    return reshape(take_rows(E, np.array([idx])), (E.data.shape[1],))


def _fan_uniform(rng, fan_in, fan_out, shape):
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=shape)


@dataclass
class GrvuParams:
    """The six d x d gate matrices (stored row-vector major: out = x @ U)."""

    U_z: Parameter
    W_z: Parameter
    U_r: Parameter
    W_r: Parameter
    U_h: Parameter
    W_h: Parameter
    b_z: Parameter | None = None
    b_r: Parameter | None = None
    b_h: Parameter | None = None

    @property
    def dim(self) -> int:
        return self.U_z.data.shape[0]

    def parameters(self) -> list[Parameter]:
        mats = [self.U_z, self.W_z, self.U_r, self.W_r, self.U_h, self.W_h]
        return mats + [b for b in (self.b_z, self.b_r, self.b_h) if b is not None]

    @classmethod
    def create(cls, d: int, rng, dtype="f32", init_sigma=None, use_bias=False) -> "GrvuParams":
        """Fresh parameters: uniform fan-based init by default, or Gaussian
        with the given sigma when init_sigma is set."""

        def mat(name):
            if init_sigma is not None:
                w = rng.normal(0.0, init_sigma, size=(d, d))
            else:
                w = _fan_uniform(rng, d, d, (d, d))
            return Parameter(name, w, dtype=dtype)

        biases = {}
        if use_bias:
            np_dtype = DTYPES[dtype] if isinstance(dtype, str) else dtype
            biases = {
                f"b_{g}": Parameter(f"grvu.b_{g}", np.zeros(d, dtype=np_dtype))
                for g in ("z", "r", "h")
            }
        return cls(
            U_z=mat("grvu.U_z"),
            W_z=mat("grvu.W_z"),
            U_r=mat("grvu.U_r"),
            W_r=mat("grvu.W_r"),
            U_h=mat("grvu.U_h"),
            W_h=mat("grvu.W_h"),
            **biases,
        )


@dataclass
class RvnnParams:
    """Ungated baseline: one weight matrix and bias."""

    W: Parameter
    b: Parameter

    @property
    def dim(self) -> int:
        return self.W.data.shape[0]

    def parameters(self) -> list[Parameter]:
        return [self.W, self.b]

    @classmethod
    def create(cls, d: int, rng, dtype="f32", init_sigma=None) -> "RvnnParams":
        if init_sigma is not None:
            w = rng.normal(0.0, init_sigma, size=(d, d))
        else:
            w = _fan_uniform(rng, d, d, (d, d))
        np_dtype = DTYPES[dtype] if isinstance(dtype, str) else dtype
        return cls(
            W=Parameter("rvnn.W", w, dtype=dtype),
            b=Parameter("rvnn.b", np.zeros(d, dtype=np_dtype)),
        )


def grvu_cell(x: Tensor, child_sum: Tensor, params: GrvuParams) -> Tensor:
    """Batched gate arithmetic on (n, d) rows; child_sum rows are the
    summed child states (zeros for leaves)."""
    za = add(matmul(x, params.U_z), matmul(child_sum, params.W_z))
    ra = add(matmul(x, params.U_r), matmul(child_sum, params.W_r))
    if params.b_z is not None:
        za = add_bias(za, params.b_z)
        ra = add_bias(ra, params.b_r)
    z = sigmoid(za)
    r = sigmoid(ra)
    ca = add(matmul(x, params.U_h), matmul(hadamard(child_sum, r), params.W_h))
    if params.b_h is not None:
        ca = add_bias(ca, params.b_h)
    c = tanh_act(ca)
    return add(hadamard(z, child_sum), hadamard(one_minus(z), c))


def rvnn_cell(x: Tensor, child_sum: Tensor, params: RvnnParams) -> Tensor:
    return sigmoid(add_bias(add(matmul(x, params.W), child_sum), params.b))


def _sum_child_states(x: Tensor, child_states, d: int) -> Tensor:
    total = None
    for h in child_states:
        if h.data.shape != (d,):
            raise DimensionMismatch(f"child state shape {h.data.shape}, expected ({d},)")
        total = h if total is None else add(total, h)
    if total is None:
        return Tensor(np.zeros(d, dtype=x.data.dtype))
    return total


def grvu_node(x_j: Tensor, child_states, params: GrvuParams) -> Tensor:
    """Hidden state of one node from its token embedding and the states of
    its children (possibly none)."""
    d = params.dim
    if x_j.data.shape != (d,):
        raise DimensionMismatch(f"input shape {x_j.data.shape}, expected ({d},)")
    s = _sum_child_states(x_j, child_states, d)
    out = grvu_cell(reshape(x_j, (1, d)), reshape(s, (1, d)), params)
    return reshape(out, (d,))


def rvnn_node(x_j: Tensor, child_states, params: RvnnParams) -> Tensor:
    d = params.dim
    if x_j.data.shape != (d,):
        raise DimensionMismatch(f"input shape {x_j.data.shape}, expected ({d},)")
    s = _sum_child_states(x_j, child_states, d)
    out = rvnn_cell(reshape(x_j, (1, d)), reshape(s, (1, d)), params)
    return reshape(out, (d,))


@dataclass
class SubtreeEmbedding:
    o: Tensor
    subtree: StatementSubtree


def encode_subtree(subtree: StatementSubtree, vocab: Vocabulary, E, params) -> SubtreeEmbedding:
    """Sequential reference encoder: post-order evaluation of the cell over
    the subtree's members. Markers encode as a single childless node."""
    node_fn = grvu_node if isinstance(params, GrvuParams) else rvnn_node
    if subtree.is_marker:
        x = _label_embedding(subtree.label, vocab, E)
        return SubtreeEmbedding(o=node_fn(x, [], params), subtree=subtree)

    ast = subtree.ast
    states: dict[int, Tensor] = {}
    stack = [(subtree.root_id, False)]
    while stack:
        nid, ready = stack.pop()
        kids = subtree.member_children(nid)
        if not ready:
            stack.append((nid, True))
            for c in reversed(kids):
                stack.append((c, False))
            continue
        x = embed_token(ast.node(nid), vocab, E)
        states[nid] = node_fn(x, [states[c] for c in kids], params)
    return SubtreeEmbedding(o=states[subtree.root_id], subtree=subtree)


def _label_embedding(label: str, vocab: Vocabulary, E) -> Tensor:
    idx = vocab.lookup(label)
    return reshape(take_rows(E, np.array([idx])), (E.data.shape[1],))


def encode_sequence_grvu(seq: SubtreeSequence, vocab: Vocabulary, E, params) -> list[SubtreeEmbedding]:
    """Encode every subtree of a sequence independently, in order."""
    if not seq.items:
        raise EmptySequence("cannot encode an empty subtree sequence")
    return [encode_subtree(st, vocab, E, params) for st in seq.items]


def gradient_health(depth: int, params_grvu: GrvuParams, params_rvnn: RvnnParams, seed: int = 0) -> dict:
    """Leaf-to-root gradient ratio on a chain tree of the given depth.

    Feeds fixed random inputs through both cells on the same chain, takes
    a scalar loss on the root state, and reports
    ||d loss / d x_leaf|| / ||d loss / d x_root|| for each encoder. Small
    ratios mean the signal from deep nodes decays before reaching the
    root.
    """
    if depth < 2:
        raise ValueError("chain depth must be at least 2")
    d = params_grvu.dim
    rng = np.random.default_rng(seed)
    xs_data = rng.normal(0.0, 1.0, size=(depth, d))

    def run(node_fn, params):
        dt = params.parameters()[0].data.dtype
        xs = [Tensor(xs_data[i].copy(), requires_grad=True, dtype=dt) for i in range(depth)]
        h = node_fn(xs[depth - 1], [], params)
        for i in range(depth - 2, -1, -1):
            h = node_fn(xs[i], [h], params)
        backward(sum_all(h))
        leaf = float(np.linalg.norm(xs[depth - 1].grad))
        root = float(np.linalg.norm(xs[0].grad))
        return leaf / root

    return {
        "grvu_ratio": run(grvu_node, params_grvu),
        "rvnn_ratio": run(rvnn_node, params_rvnn),
    }
