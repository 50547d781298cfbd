"""Task heads, optimizer, training loop, and evaluation metrics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .checkpoint import Checkpoint
from .errors import ConfigError, DataFormatError, NonFiniteLoss, ShapeMismatch
from .grtu import CodeVector
from .grvu import Vocabulary
from .model import CodeModel, TrainConfig
from .splitter import SubtreeSequence
from .tape import (
    Parameter,
    Tensor,
    abs_val,
    add_bias,
    backward,
    bce_logits,
    cross_entropy_logits,
    matmul,
    no_grad,
    reshape,
    sigmoid,
    softmax_rows,
    sub,
    take_rows,
)
from .word2vec import pretrain_embeddings


# ---------------------------------------------------------------------------
# heads


@dataclass
class ClassifierHead:
    W: Parameter  # (feature_dim, num_classes)
    b: Parameter  # (num_classes,)

    @property
    def num_classes(self) -> int:
        return self.W.data.shape[1]

    def parameters(self) -> list[Parameter]:
        return [self.W, self.b]

    @classmethod
    def create(cls, feature_dim: int, num_classes: int, rng, dtype="f32") -> "ClassifierHead":
        if num_classes < 2:
            raise ConfigError("classification needs at least two classes")
        bound = np.sqrt(6.0 / (feature_dim + num_classes))
        w = rng.uniform(-bound, bound, size=(feature_dim, num_classes))
        return cls(
            W=Parameter("head.W", w, dtype=dtype),
            b=Parameter("head.b", np.zeros(num_classes), dtype=dtype),
        )


@dataclass
class CloneHead:
    w: Parameter  # (feature_dim,)
    b: Parameter  # (1,)
    threshold: float = 0.5

    def parameters(self) -> list[Parameter]:
        return [self.w, self.b]

    @classmethod
    def create(cls, feature_dim: int, rng, dtype="f32", threshold: float = 0.5) -> "CloneHead":
        if not 0.0 < threshold < 1.0:
            raise ConfigError("clone threshold must lie strictly between 0 and 1")
        bound = np.sqrt(6.0 / (feature_dim + 1))
        w = rng.uniform(-bound, bound, size=feature_dim)
        return cls(
            w=Parameter("clone.w", w, dtype=dtype),
            b=Parameter("clone.b", np.zeros(1), dtype=dtype),
            threshold=threshold,
        )


def _as_rows(c) -> Tensor:
    if isinstance(c, CodeVector):
        c = c.c
    if c.data.ndim == 1:
        return reshape(c, (1, c.data.shape[0]))
    return c


def class_logits(c, head: ClassifierHead) -> Tensor:
    rows = _as_rows(c)
    if rows.data.shape[1] != head.W.data.shape[0]:
        raise ShapeMismatch(
            f"feature width {rows.data.shape[1]} does not match head {head.W.data.shape}"
        )
    return add_bias(matmul(rows, head.W), head.b)


def classify(c, head: ClassifierHead) -> Tensor:
    """Class probabilities for one code vector; rows sum to one."""
    probs = softmax_rows(class_logits(c, head))
    if not isinstance(c, CodeVector) and getattr(c, "data", None) is not None and c.data.ndim == 2:
        return probs
    return reshape(probs, (head.num_classes,))


def clone_logits(c1_rows: Tensor, c2_rows: Tensor, head: CloneHead) -> Tensor:
    """Pairwise clone logits from two aligned (n, feature_dim) batches."""
    if c1_rows.data.shape != c2_rows.data.shape:
        raise ShapeMismatch(
            f"pair shapes differ: {c1_rows.data.shape} vs {c2_rows.data.shape}"
        )
    diff = abs_val(sub(c1_rows, c2_rows))
    w_col = reshape(head.w, (head.w.data.shape[0], 1))
    out = add_bias(matmul(diff, w_col), head.b)
    return reshape(out, (c1_rows.data.shape[0],))


def clone_score(c1, c2, head: CloneHead) -> Tensor:
    """Probability that two code vectors are clones; symmetric in its
    arguments by construction."""
    logit = clone_logits(_as_rows(c1), _as_rows(c2), head)
    return reshape(sigmoid(logit), ())


# ---------------------------------------------------------------------------
# optimizer


class Adam:
    """Adaptive-moment SGD with bias correction."""

    def __init__(self, params, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self._m = [np.zeros_like(p.data) for p in self.params]
        self._v = [np.zeros_like(p.data) for p in self.params]

    def zero_grad(self):
        for p in self.params:
            p.zero_grad()

    def step(self):
        self.t += 1
        b1t = 1.0 - self.beta1 ** self.t
        b2t = 1.0 - self.beta2 ** self.t
        for p, m, v in zip(self.params, self._m, self._v):
            g = p.grad
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            update = (m / b1t) / (np.sqrt(v / b2t) + self.eps)
            p.data -= (self.lr * update).astype(p.data.dtype, copy=False)


# ---------------------------------------------------------------------------
# datasets (in-memory form; file loading lives in datasets.py)


@dataclass
class ClassificationData:
    train: list[tuple[SubtreeSequence, int]]
    val: list[tuple[SubtreeSequence, int]]
    test: list[tuple[SubtreeSequence, int]]
    num_classes: int


@dataclass
class CloneData:
    programs: dict[str, SubtreeSequence]
    train: list[tuple[str, str, int]]
    val: list[tuple[str, str, int]]
    test: list[tuple[str, str, int]]


# ---------------------------------------------------------------------------
# metrics


def evaluate_classification(checkpoint: Checkpoint, samples) -> float:
    """Exact proportion of correctly classified samples."""
    model, head = build_from_checkpoint(checkpoint)
    if not samples:
        return 0.0
    sequences = [s for s, _ in samples]
    labels = np.array([y for _, y in samples])
    preds = predict_classes(model, head, sequences)
    return float((preds == labels).mean())


def precision_recall_f1(tp: int, fp: int, fn: int) -> dict:
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return {"precision": precision, "recall": recall, "f1": f1}


def evaluate_clone(checkpoint: Checkpoint, programs, pairs) -> dict:
    """Precision/recall/F1 of thresholded clone scores over labeled pairs."""
    model, head = build_from_checkpoint(checkpoint)
    if not pairs:
        return {"precision": 0.0, "recall": 0.0, "f1": 0.0}
    probs = predict_clone_probs(model, head, programs, pairs)
    predicted = probs >= head.threshold
    actual = np.array([label for _, _, label in pairs]) == 1
    tp = int(np.sum(predicted & actual))
    fp = int(np.sum(predicted & ~actual))
    fn = int(np.sum(~predicted & actual))
    return precision_recall_f1(tp, fp, fn)


def predict_classes(model: CodeModel, head: ClassifierHead, sequences, batch_size=64) -> np.ndarray:
    out = []
    with no_grad():
        for lo in range(0, len(sequences), batch_size):
            chunk = sequences[lo:lo + batch_size]
            c, _ = model.encode_rows(chunk)
            logits = class_logits(c, head)
            out.append(logits.data.argmax(axis=1))
    return np.concatenate(out) if out else np.zeros(0, dtype=np.int64)


def predict_clone_probs(model: CodeModel, head: CloneHead, programs, pairs, batch_size=32) -> np.ndarray:
    out = []
    with no_grad():
        for lo in range(0, len(pairs), batch_size):
            chunk = pairs[lo:lo + batch_size]
            seqs = [programs[a] for a, _, _ in chunk] + [programs[b] for _, b, _ in chunk]
            c, _ = model.encode_rows(seqs)
            n = len(chunk)
            c1 = Tensor(c.data[:n])
            c2 = Tensor(c.data[n:])
            logits = clone_logits(c1, c2, head)
            x = logits.data
            out.append(np.where(x >= 0, 1.0 / (1.0 + np.exp(-x)),
                                np.exp(np.minimum(x, 0)) / (1.0 + np.exp(np.minimum(x, 0)))))
    return np.concatenate(out) if out else np.zeros(0)


# ---------------------------------------------------------------------------
# training loop


def _batches(n: int, batch_size: int, order=None):
    idx = np.arange(n) if order is None else order
    for lo in range(0, n, batch_size):
        yield idx[lo:lo + batch_size]


def train(dataset, config: TrainConfig, log=None) -> Checkpoint:
    """Mini-batched training; returns the best-validation checkpoint.

    ``log`` is an optional callable receiving one record dict per epoch.
    """
    config.validate()
    if isinstance(dataset, ClassificationData):
        task = "classify"
        if not dataset.train:
            raise DataFormatError("empty training split")
    elif isinstance(dataset, CloneData):
        task = "clone"
        if not dataset.train:
            raise DataFormatError("empty training split")
    else:
        raise DataFormatError(f"unsupported dataset type {type(dataset).__name__}")

    rng = np.random.default_rng(config.seed)
    if task == "classify":
        train_sequences = [s for s, _ in dataset.train]
    else:
        train_ids = sorted({i for a, b, _ in dataset.train for i in (a, b)})
        train_sequences = [dataset.programs[i] for i in train_ids]
    vocab = Vocabulary.from_sequences(train_sequences)

    pretrained = None
    if config.pretrain_epochs > 0:
        pretrained = pretrain_embeddings(
            train_sequences,
            vocab,
            config.d,
            epochs=config.pretrain_epochs,
            negatives=config.pretrain_negatives,
            window=config.pretrain_window,
            seed=config.seed,
        )
    model = CodeModel.create(config, vocab, rng, pretrained=pretrained)
    if task == "classify":
        head = ClassifierHead.create(model.feature_dim, dataset.num_classes, rng,
                                     dtype=config.precision)
    else:
        head = CloneHead.create(model.feature_dim, rng, dtype=config.precision)

    params = model.parameters(trainable_only=True) + head.parameters()
    opt = Adam(params, lr=config.learning_rate)
    tracked = model.parameters() + head.parameters()

    def classification_loss(batch_idx):
        seqs = [dataset.train[i][0] for i in batch_idx]
        labels = np.array([dataset.train[i][1] for i in batch_idx])
        c, _ = model.encode_rows(seqs)
        return cross_entropy_logits(class_logits(c, head), labels)

    def clone_loss(batch_idx):
        chunk = [dataset.train[i] for i in batch_idx]
        seqs = [dataset.programs[a] for a, _, _ in chunk] + [
            dataset.programs[b] for _, b, _ in chunk
        ]
        c, _ = model.encode_rows(seqs)
        n = len(chunk)
        c1 = take_rows(c, np.arange(n))
        c2 = take_rows(c, np.arange(n, 2 * n))
        labels = np.array([label for _, _, label in chunk], dtype=np.float64)
        return bce_logits(clone_logits(c1, c2, head), labels)

    loss_fn = classification_loss if task == "classify" else clone_loss

    def validation_metric():
        if task == "classify":
            if not dataset.val:
                return 0.0
            seqs = [s for s, _ in dataset.val]
            labels = np.array([y for _, y in dataset.val])
            return float((predict_classes(model, head, seqs) == labels).mean())
        if not dataset.val:
            return 0.0
        probs = predict_clone_probs(model, head, dataset.programs, dataset.val)
        labels = np.array([label for _, _, label in dataset.val]) == 1
        return _f1_from_probs(probs, labels, head.threshold)

    def extra_meta():
        extra = {"task": task}
        if task == "classify":
            extra["num_classes"] = dataset.num_classes
        else:
            extra["threshold"] = head.threshold
        return extra

    best_metric = -1.0
    best_arrays = None
    history = []
    n_train = len(dataset.train)
    for epoch in range(config.epochs):
        order = rng.permutation(n_train)
        losses = []
        for batch_idx in _batches(n_train, config.batch_size, order):
            opt.zero_grad()
            loss = loss_fn(batch_idx)
            value = float(loss.data)
            if not np.isfinite(value):
                raise NonFiniteLoss(
                    f"loss became {value} at epoch {epoch}, batch {len(losses)}"
                )
            backward(loss)
            opt.step()
            losses.append(value)
        metric = validation_metric()
        record = {
            "epoch": epoch,
            "train_loss": float(np.mean(losses)),
            "val_metric": float(metric),
        }
        history.append(record)
        if log is not None:
            log(record)
        # ties break toward the more-trained parameters
        if metric >= best_metric:
            best_metric = metric
            best_arrays = [p.data.copy() for p in tracked]

    if best_arrays is not None:
        for p, arr in zip(tracked, best_arrays):
            p.data = arr
    extra = extra_meta()
    extra["best_val"] = float(best_metric)
    extra["history"] = history
    return Checkpoint.capture(config, vocab, task, tracked, extra=extra)


def _f1_from_probs(probs: np.ndarray, actual: np.ndarray, threshold: float) -> float:
    predicted = probs >= threshold
    tp = int(np.sum(predicted & actual))
    fp = int(np.sum(predicted & ~actual))
    fn = int(np.sum(~predicted & actual))
    return precision_recall_f1(tp, fp, fn)["f1"]


def build_from_checkpoint(checkpoint: Checkpoint):
    """Reconstruct (model, head) from a checkpoint."""
    return checkpoint.build()
