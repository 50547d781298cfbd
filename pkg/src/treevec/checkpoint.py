"""Checkpoint container and its binary file format.

Layout: 7-byte magic ``XASTNN1``, a little-endian u64 header length, a JSON
header (config, vocabulary, task metadata, and per-tensor name/shape/dtype),
then the raw little-endian tensor payloads in header order. Parameters
round-trip bit-identically.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import CheckpointError
from .grvu import Vocabulary

MAGIC = b"XASTNN1"
FORMAT_VERSION = 1


@dataclass
class Checkpoint:
    config: "TrainConfig"
    vocab_tokens: list[str]
    task: str
    tensors: dict[str, np.ndarray]
    extra: dict = field(default_factory=dict)

    @classmethod
    def capture(cls, config, vocab: Vocabulary, task: str, params, extra=None) -> "Checkpoint":
        """Snapshot a list of Parameters (arrays are copied)."""
        tensors = {}
        for p in params:
            if p.name in tensors:
                raise CheckpointError(f"duplicate parameter name {p.name!r}")
            tensors[p.name] = p.data.copy()
        return cls(
            config=config,
            vocab_tokens=list(vocab.tokens),
            task=task,
            tensors=tensors,
            extra=dict(extra or {}),
        )

    # reconstruction -------------------------------------------------------

    def vocabulary(self) -> Vocabulary:
        return Vocabulary(
            token_to_index={t: i for i, t in enumerate(self.vocab_tokens)},
            tokens=list(self.vocab_tokens),
        )

    def build(self):
        """Rebuild (model, head) with parameters aliasing this checkpoint's
        arrays."""
        from .grtu import GrtuParams, GruDirection
        from .grvu import GrvuParams, RvnnParams
        from .model import CodeModel
        from .tape import Parameter
        from .training import ClassifierHead, CloneHead

        t = self.tensors

        def param(name):
            if name not in t:
                raise CheckpointError(f"checkpoint is missing tensor {name!r}")
            return Parameter(name, t[name])

        def maybe(name):
            return Parameter(name, t[name]) if name in t else None

        grvu = rvnn = grtu = None
        if "grvu.U_z" in t:
            grvu = GrvuParams(
                U_z=param("grvu.U_z"), W_z=param("grvu.W_z"),
                U_r=param("grvu.U_r"), W_r=param("grvu.W_r"),
                U_h=param("grvu.U_h"), W_h=param("grvu.W_h"),
                b_z=maybe("grvu.b_z"), b_r=maybe("grvu.b_r"), b_h=maybe("grvu.b_h"),
            )
        if "rvnn.W" in t:
            rvnn = RvnnParams(W=param("rvnn.W"), b=param("rvnn.b"))
        if "grtu.fwd.W_z" in t:
            def direction(tag):
                return GruDirection(
                    W_z=param(f"grtu.{tag}.W_z"), U_z=param(f"grtu.{tag}.U_z"),
                    b_z=param(f"grtu.{tag}.b_z"),
                    W_r=param(f"grtu.{tag}.W_r"), U_r=param(f"grtu.{tag}.U_r"),
                    b_r=param(f"grtu.{tag}.b_r"),
                    W_h=param(f"grtu.{tag}.W_h"), U_h=param(f"grtu.{tag}.U_h"),
                    b_h=param(f"grtu.{tag}.b_h"),
                )

            grtu = GrtuParams(fwd=direction("fwd"), bwd=direction("bwd"))

        model = CodeModel(
            self.config, self.vocabulary(), param("embeddings"),
            grvu=grvu, rvnn=rvnn, grtu=grtu,
        )
        if self.task == "classify":
            head = ClassifierHead(W=param("head.W"), b=param("head.b"))
        elif self.task == "clone":
            head = CloneHead(
                w=param("clone.w"), b=param("clone.b"),
                threshold=float(self.extra.get("threshold", 0.5)),
            )
        else:
            raise CheckpointError(f"unknown task {self.task!r}")
        return model, head

    # persistence ----------------------------------------------------------

    def save(self, path) -> None:
        metas = []
        payloads = []
        for name, arr in self.tensors.items():
            le = arr.astype(arr.dtype.newbyteorder("<"), copy=False)
            payload = np.ascontiguousarray(le).tobytes()
            metas.append({"name": name, "shape": list(arr.shape), "dtype": le.dtype.str})
            payloads.append(payload)
        header = json.dumps(
            {
                "version": FORMAT_VERSION,
                "task": self.task,
                "config": self.config.to_dict(),
                "vocab": self.vocab_tokens,
                "extra": self.extra,
                "tensors": metas,
            }
        ).encode("utf-8")
        with open(path, "wb") as fh:
            fh.write(MAGIC)
            fh.write(struct.pack("<Q", len(header)))
            fh.write(header)
            for payload in payloads:
                fh.write(payload)

    @classmethod
    def load(cls, path) -> "Checkpoint":
        from .model import TrainConfig

        try:
            with open(path, "rb") as fh:
                blob = fh.read()
        except OSError as exc:
            raise CheckpointError(f"cannot read checkpoint: {exc}") from exc
        if len(blob) < len(MAGIC) + 8 or blob[: len(MAGIC)] != MAGIC:
            raise CheckpointError("bad magic: not a checkpoint file")
        (header_len,) = struct.unpack_from("<Q", blob, len(MAGIC))
        start = len(MAGIC) + 8
        if start + header_len > len(blob):
            raise CheckpointError("truncated checkpoint header")
        try:
            header = json.loads(blob[start:start + header_len].decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise CheckpointError(f"unreadable header: {exc}") from exc
        if header.get("version") != FORMAT_VERSION:
            raise CheckpointError(f"unsupported version {header.get('version')!r}")
        offset = start + header_len
        tensors: dict[str, np.ndarray] = {}
        for meta in header["tensors"]:
            dtype = np.dtype(meta["dtype"])
            shape = tuple(meta["shape"])
            count = int(np.prod(shape)) if shape else 1
            nbytes = count * dtype.itemsize
            if offset + nbytes > len(blob):
                raise CheckpointError(f"truncated payload for tensor {meta['name']!r}")
            arr = np.frombuffer(blob, dtype=dtype, count=count, offset=offset)
            tensors[meta["name"]] = arr.reshape(shape).copy()
            offset += nbytes
        return cls(
            config=TrainConfig.from_dict(header["config"]),
            vocab_tokens=list(header["vocab"]),
            task=header["task"],
            tensors=tensors,
            extra=dict(header.get("extra", {})),
        )
