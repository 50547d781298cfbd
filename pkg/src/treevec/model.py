"""End-to-end code-vector model: configuration and forward paths.

A model bundles the vocabulary, the token embedding table, the tree-cell
parameters, and the sequence-cell parameters. Three configuration switches
select reduced variants for comparison runs: ``disable_grvu`` replaces
subtree encoding with the mean of member token embeddings, ``use_rvnn``
swaps the gated tree cell for the ungated baseline, and ``disable_grtu``
feeds subtree embeddings straight into pooling.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, replace

import numpy as np

from .batching import FlatBatch, bottom_up, flatten
from .errors import ConfigError
from .grtu import GrtuParams, encode_sequence_rows, pool_rows
from .grvu import (
    GrvuParams,
    RvnnParams,
    Vocabulary,
    init_embeddings,
    subtree_tokens,
)
from .tape import Parameter, Tensor, no_grad, scale_rows, segment_sum, take_rows

GRANULARITIES = ("statement", "program", "token")
PRECISIONS = ("f32", "f64")


@dataclass
class TrainConfig:
    d: int = 128
    m: int | None = None  # sequence hidden size; defaults to d
    learning_rate: float = 1e-3
    batch_size: int = 32
    epochs: int = 10
    seed: int = 42
    precision: str = "f32"
    granularity: str = "statement"
    disable_grvu: bool = False
    disable_grtu: bool = False
    use_rvnn: bool = False
    grvu_bias: bool = False
    freeze_embeddings: bool = False
    pretrain_epochs: int = 0  # 0 keeps the random-init table
    pretrain_negatives: int = 5
    pretrain_window: int = 2

    @property
    def hidden_m(self) -> int:
        return self.d if self.m is None else self.m

    @property
    def feature_dim(self) -> int:
        return self.d if self.disable_grtu else 2 * self.hidden_m

    def validate(self) -> "TrainConfig":
        if self.d <= 0 or self.hidden_m <= 0:
            raise ConfigError("model dimensions must be positive")
        if self.learning_rate <= 0:
            raise ConfigError("learning rate must be positive")
        if self.batch_size <= 0 or self.epochs <= 0:
            raise ConfigError("batch size and epochs must be positive")
        if self.precision not in PRECISIONS:
            raise ConfigError(f"precision must be one of {PRECISIONS}")
        if self.granularity not in GRANULARITIES:
            raise ConfigError(f"granularity must be one of {GRANULARITIES}")
        if self.disable_grvu and self.use_rvnn:
            raise ConfigError("disable_grvu and use_rvnn are mutually exclusive")
        if self.pretrain_epochs < 0 or self.pretrain_negatives < 0:
            raise ConfigError("pretraining settings must be non-negative")
        return self

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "TrainConfig":
        known = {f for f in cls.__dataclass_fields__}
        return cls(**{k: v for k, v in data.items() if k in known}).validate()

    def with_overrides(self, **kwargs) -> "TrainConfig":
        return replace(self, **kwargs).validate()


class CodeModel:
    """Vocabulary + parameters + the batched forward pass."""

    def __init__(self, config: TrainConfig, vocab: Vocabulary, embeddings: Parameter,
                 grvu: GrvuParams | None = None, rvnn: RvnnParams | None = None,
                 grtu: GrtuParams | None = None):
        self.config = config
        self.vocab = vocab
        self.embeddings = embeddings
        self.grvu = grvu
        self.rvnn = rvnn
        self.grtu = grtu

    @classmethod
    def create(cls, config: TrainConfig, vocab: Vocabulary, rng,
               pretrained: np.ndarray | None = None) -> "CodeModel":
        config.validate()
        d = config.d
        dtype = config.precision
        if pretrained is not None:
            if pretrained.shape != (vocab.size, d):
                raise ConfigError(
                    f"pretrained table shape {pretrained.shape} does not match "
                    f"({vocab.size}, {d})"
                )
            embeddings = Parameter("embeddings", pretrained, dtype=dtype)
        else:
            embeddings = init_embeddings(vocab, d, rng, dtype=dtype)
        grvu = rvnn = grtu = None
        if config.use_rvnn:
            rvnn = RvnnParams.create(d, rng, dtype=dtype)
        elif not config.disable_grvu:
            grvu = GrvuParams.create(d, rng, dtype=dtype, use_bias=config.grvu_bias)
        if not config.disable_grtu:
            grtu = GrtuParams.create(d, config.hidden_m, rng, dtype=dtype)
        return cls(config, vocab, embeddings, grvu=grvu, rvnn=rvnn, grtu=grtu)

    @property
    def feature_dim(self) -> int:
        return self.config.feature_dim

    def parameters(self, trainable_only: bool = False) -> list[Parameter]:
        params: list[Parameter] = []
        if not (trainable_only and self.config.freeze_embeddings):
            params.append(self.embeddings)
        for group in (self.grvu, self.rvnn, self.grtu):
            if group is not None:
                params.extend(group.parameters())
        return params

    # forward ------------------------------------------------------------

    def subtree_rows(self, flat: FlatBatch) -> Tensor:
        """One embedding row per subtree of the flat batch."""
        if self.config.disable_grvu:
            return self._token_mean_rows(flat)
        params = self.rvnn if self.config.use_rvnn else self.grvu
        return bottom_up(flat, self.vocab, self.embeddings, params)

    def _token_mean_rows(self, flat: FlatBatch) -> Tensor:
        toks: list[int] = []
        segs: list[int] = []
        counts = np.empty(len(flat.subtrees), dtype=np.float64)
        for i, st in enumerate(flat.subtrees):
            stream = subtree_tokens(st)
            counts[i] = len(stream)
            toks.extend(self.vocab.lookup(t) for t in stream)
            segs.extend([i] * len(stream))
        rows = take_rows(self.embeddings, np.asarray(toks, dtype=np.int64))
        sums = segment_sum(rows, np.asarray(segs, dtype=np.int64), len(flat.subtrees))
        return scale_rows(sums, 1.0 / counts)

    def encode_rows(self, sequences) -> tuple[Tensor, np.ndarray]:
        """Code vectors for a batch of subtree sequences.

        Returns the (batch, feature_dim) tensor and the pooling argmax
        provenance (flat row index per coordinate).
        """
        flat = flatten(sequences)
        o = self.subtree_rows(flat)
        if self.config.disable_grtu:
            v = o
        else:
            v = encode_sequence_rows(o, flat.lengths, self.grtu)
        return pool_rows(v, flat.lengths)

    def encode_one(self, sequence) -> np.ndarray:
        """Forward-only single-program code vector."""
        with no_grad():
            c, _ = self.encode_rows([sequence])
        return np.array(c.data[0], copy=True)
