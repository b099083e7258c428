"""Optimization loop, train/test split paradigms, and evaluation."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .ops import softmax_cross_entropy
from .tensor import Tensor

PARADIGMS = ("competition", "within_subject", "cross_subject")


class TrainingError(RuntimeError):
    """Training aborted (bad inputs or a non-finite loss)."""


@dataclass
class TrainConfig:
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 2e-2
    batch_size: int = 20
    epochs: int = 100
    paradigm: str = "within_subject"
    subject: int | None = None
    seed: int = 0
    # False: decoupled decay (applied directly to the weights); True:
    # classic L2 added to the gradient before the Adam moments.
    coupled_weight_decay: bool = False

    def validate(self):
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.epochs < 0:
            raise ValueError(f"epochs must be >= 0, got {self.epochs}")
        if self.paradigm not in PARADIGMS:
            raise ValueError(f"unknown paradigm {self.paradigm!r}; pick one of {PARADIGMS}")
        return self

    def default_dropout(self):
        """Paradigm-dependent default: 0.5 within-subject, else 0.25."""
        return 0.5 if self.paradigm == "within_subject" else 0.25


@dataclass
class AdamState:
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)

    def ensure(self, name, shape):
        if name not in self.m:
            self.m[name] = np.zeros(shape)
            self.v[name] = np.zeros(shape)
        elif self.m[name].shape != shape:
            raise ValueError(f"optimizer state shape {self.m[name].shape} != param {shape} ({name})")


def adam_step(params, state, config):
    """One Adam update with bias correction over (name, tensor, decay) triples.

    Weight decay is decoupled by default and touches only tensors flagged
    decay=True (convolutional and fully connected weights); layer-norm
    parameters and sinc cutoffs are never decayed.
    """
    state.step += 1
    t = state.step
    lr, b1, b2 = config.learning_rate, config.beta1, config.beta2
    for name, p, decay in params:
        state.ensure(name, p.shape)
        g = p.grad if p.grad is not None else np.zeros(p.shape)
        if g.shape != p.shape:
            raise ValueError(f"gradient shape {g.shape} != param {p.shape} ({name})")
        if decay and config.coupled_weight_decay and config.weight_decay:
            g = g + config.weight_decay * p.data
        m = state.m[name] = b1 * state.m[name] + (1 - b1) * g
        v = state.v[name] = b2 * state.v[name] + (1 - b2) * g * g
        mh = m / (1 - b1 ** t)
        vh = v / (1 - b2 ** t)
        p.data = p.data - lr * mh / (np.sqrt(vh) + config.eps)
        if decay and not config.coupled_weight_decay and config.weight_decay:
            p.data = p.data - lr * config.weight_decay * p.data


def split_dataset(trials, paradigm, subject=None):
    """Train/test split for the three evaluation paradigms.

    competition: session 1 of every subject trains, session 2 tests.
    within_subject: one subject's session 1 trains, their session 2 tests.
    cross_subject: every other subject's session 1 trains, the subject's
    session 2 tests. Train and test are disjoint by session in all cases.
    """
    if paradigm not in PARADIGMS:
        raise ValueError(f"unknown paradigm {paradigm!r}; pick one of {PARADIGMS}")
    sessions = np.asarray(trials.sessions)
    subjects = np.asarray(trials.subjects)
    if not np.all(np.isin(sessions, (1, 2))):
        raise ValueError("trials must carry session tags 1 or 2")
    if paradigm == "competition":
        train_mask = sessions == 1
        test_mask = sessions == 2
    else:
        if subject is None:
            raise ValueError(f"paradigm {paradigm!r} needs a subject id")
        if subject not in subjects:
            raise ValueError(f"unknown subject id {subject}")
        if paradigm == "within_subject":
            train_mask = (subjects == subject) & (sessions == 1)
        else:
            train_mask = (subjects != subject) & (sessions == 1)
        test_mask = (subjects == subject) & (sessions == 2)
    return trials.subset(train_mask), trials.subset(test_mask)


def train(model, train_set, config, state=None):
    """Run epochs x ceil(n/batch) Adam steps over per-epoch shuffles.

    The last partial batch is kept. Returns the per-epoch mean training
    loss. Identical seed + data yield bitwise-identical parameters.
    """
    config.validate()
    n = len(train_set)
    if n == 0:
        raise TrainingError("empty training set")
    data = np.asarray(train_set.data, dtype=np.float64)
    labels = np.asarray(train_set.labels, dtype=np.int64)
    shuffle_rng, dropout_rng = (np.random.default_rng(s)
                                for s in np.random.SeedSequence(config.seed).spawn(2))
    state = state if state is not None else AdamState()
    params = model.parameters()
    curve = []
    for epoch in range(config.epochs):
        order = shuffle_rng.permutation(n)
        total = 0.0
        for step, start in enumerate(range(0, n, config.batch_size)):
            idx = order[start:start + config.batch_size]
            logits = model.forward(Tensor(data[idx]), training=True, rng=dropout_rng)
            loss = softmax_cross_entropy(logits, labels[idx])
            value = float(loss.data)
            if not np.isfinite(value):
                raise TrainingError(
                    f"non-finite loss ({value}) at epoch {epoch}, step {step}")
            model.zero_grad()
            loss.backward()
            adam_step(params, state, config)
            total += value * len(idx)
        curve.append(total / n)
    return curve


@dataclass
class EvalReport:
    confusion: np.ndarray  # (N, N) counts, rows = true class
    accuracy: float
    per_subject: dict
    metadata: dict = field(default_factory=dict)

    def format(self):
        lines = [f"accuracy {self.accuracy:.4f}", "confusion_matrix"]
        for row in self.confusion:
            lines.append(" ".join(str(int(v)) for v in row))
        for subj in sorted(self.per_subject):
            lines.append(f"subject {subj} accuracy {self.per_subject[subj]:.4f}")
        for key in sorted(self.metadata):
            lines.append(f"meta {key} {self.metadata[key]}")
        return "\n".join(lines)


def evaluate(model, test_set, batch_size=64):
    """Argmax classification over the test set; dropout disabled.

    Ties break toward the lowest class index. Pure function of
    (model, test_set).
    """
    n = len(test_set)
    if n == 0:
        raise TrainingError("empty test set")
    N = model.config.n_classes
    data = np.asarray(test_set.data, dtype=np.float64)
    labels = np.asarray(test_set.labels, dtype=np.int64)
    subjects = np.asarray(test_set.subjects)
    confusion = np.zeros((N, N), dtype=np.int64)
    predicted = np.empty(n, dtype=np.int64)
    for start in range(0, n, batch_size):
        sl = slice(start, start + batch_size)
        logits = model.forward(Tensor(data[sl]), training=False)
        predicted[sl] = np.argmax(logits.data, axis=1)
    for true, pred in zip(labels, predicted):
        confusion[true, pred] += 1
    accuracy = float(np.trace(confusion)) / n
    per_subject = {}
    for subj in np.unique(subjects):
        mask = subjects == subj
        per_subject[int(subj)] = float(np.mean(predicted[mask] == labels[mask]))
    return EvalReport(confusion=confusion, accuracy=accuracy, per_subject=per_subject)
