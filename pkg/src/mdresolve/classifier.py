"""Weight vectors for candidate pairs and a linear SVM over them.

Feature slots are read from configuration.  A slot names an attribute path,
optionally through foreign references (``cid->Conference.fname``), plus
fallback paths and a missing-value policy:

``skip-pair``   a null on the primary path drops the pair (reported)
``zero``        a null on the primary path contributes weight 0.0
``substitute``  the first path with non-null values on both sides is used

The SVM minimises ``lam/2 |w|^2 + mean(hinge)`` with seeded stochastic
subgradient steps; the bias is not regularised.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ClassifierError, DegenerateTrainingError
from .schema import Instance, Record, Schema, Value
from .similarity import KERNEL_FOR_DOMAIN, SimCache, column_corpus, value_similarity

POLICIES = ("skip-pair", "zero", "substitute")


@dataclass(frozen=True)
class AttrPath:
    """``attr`` or ``attr->Rel.attr2->Rel2.attr3``; each hop reads a referenced record by rid."""

    relation: str
    hops: tuple[tuple[str, str], ...]  # (relation, attribute) in reading order

    @property
    def final(self) -> tuple[str, str]:
        return self.hops[-1]

    @property
    def direct(self) -> bool:
        return len(self.hops) == 1

    def resolve(self, record: Record, instance: Instance) -> Value:
        value = record.values[self.hops[0][1]]
        for rel, attr in self.hops[1:]:
            if value is None:
                return None
            target = instance.record(rel, value)
            if target is None:
                return None
            value = target.values[attr]
        return value

    def __str__(self) -> str:
        parts = [self.hops[0][1]] + [f"{r}.{a}" for r, a in self.hops[1:]]
        return "->".join(parts)


def parse_path(text: str, relation: str, schema: Schema) -> AttrPath:
    parts = [p.strip() for p in text.split("->")]
    decl = schema.relation(relation)
    if parts[0] not in decl.domains:
        raise ClassifierError(f"unknown attribute {relation}.{parts[0]} in feature path {text!r}")
    hops = [(relation, parts[0])]
    for part in parts[1:]:
        rel, _, attr = part.partition(".")
        if not schema.has_relation(rel) or attr not in schema.relation(rel).domains:
            raise ClassifierError(f"feature path {text!r}: unknown attribute {part!r}")
        hops.append((rel, attr))
    return AttrPath(relation, tuple(hops))


@dataclass(frozen=True)
class FeatureSlot:
    name: str
    paths: tuple[AttrPath, ...]
    policy: str = "skip-pair"

    def __post_init__(self):
        if self.policy not in POLICIES:
            raise ClassifierError(f"slot {self.name}: unknown policy {self.policy!r}")
        if not self.paths:
            raise ClassifierError(f"slot {self.name}: no attribute path")


@dataclass(frozen=True)
class FeatureSpec:
    relation: str
    slots: tuple[FeatureSlot, ...]

    def __len__(self) -> int:
        return len(self.slots)

    @property
    def names(self) -> list[str]:
        return [s.name for s in self.slots]


def parse_feature_spec(relation: str, entries: Mapping[str, str], schema: Schema) -> FeatureSpec:
    """Entries map slot name -> ``path | fallback ... [; policy]``, in slot order."""
    slots = []
    for name, text in entries.items():
        body, _, policy = text.partition(";")
        policy = policy.strip() or "skip-pair"
        paths = tuple(parse_path(p, relation, schema) for p in body.split("|") if p.strip())
        slots.append(FeatureSlot(name, paths, policy))
    if not slots:
        raise ClassifierError(f"no feature slots for {relation}")
    return FeatureSpec(relation, tuple(slots))


@dataclass(frozen=True)
class WeightVector:
    rid1: int
    rid2: int
    weights: tuple[float, ...]

    def __post_init__(self):
        if self.rid1 >= self.rid2:
            raise ClassifierError("weight vectors use the (smaller rid, larger rid) order")


@dataclass(frozen=True)
class Skipped:
    rid1: int
    rid2: int
    slot: str


def _slot_weight(path: AttrPath, a: Value, b: Value, instance: Instance, cache: SimCache | None) -> float:
    if a == b:
        return 1.0
    rel, attr = path.final
    if cache is not None and path.direct:
        for name in cache.for_attribute(rel, attr):
            w = cache.weight(name, a, b)
            if w is not None:
                return w
    kernel = KERNEL_FOR_DOMAIN[instance.schema.relation(rel).domain(attr)]
    corpus = column_corpus(instance, rel, attr) if kernel == "tfidf-cosine" else None
    return value_similarity(kernel, a, b, corpus)


def compute_weight_vector(r1: Record, r2: Record, spec: FeatureSpec, instance: Instance,
                          cache: SimCache | None = None) -> WeightVector | Skipped:
    """Per-slot similarity of two records, or the slot that forced a skip."""
    if r1.rid > r2.rid:
        r1, r2 = r2, r1
    weights = []
    for slot in spec.slots:
        chosen = None
        paths = slot.paths if slot.policy == "substitute" else slot.paths[:1]
        for path in paths:
            a, b = path.resolve(r1, instance), path.resolve(r2, instance)
            if a is not None and b is not None:
                chosen = (path, a, b)
                break
        if chosen is None:
            if slot.policy == "zero":
                weights.append(0.0)
                continue
            return Skipped(r1.rid, r2.rid, slot.name)
        weights.append(_slot_weight(*chosen, instance, cache))
    return WeightVector(r1.rid, r2.rid, tuple(weights))


@dataclass
class SvmModel:
    w: np.ndarray
    b: float
    lam: float
    epochs: int = 0
    seed: int = 0
    history: list[float] = field(default_factory=list)

    def decision(self, x: Sequence[float]) -> float:
        x = np.asarray(x, dtype=float)
        if x.shape != self.w.shape:
            raise ClassifierError(f"vector has {x.size} features, model expects {self.w.size}")
        return float(x @ self.w) + self.b

    def dump(self) -> str:
        lines = [repr(float(self.lam)), repr(float(self.b))] + [repr(float(v)) for v in self.w]
        return "".join(line + "\n" for line in lines)


def load_model(text: str) -> SvmModel:
    rows = [line.strip() for line in text.splitlines() if line.strip()]
    if len(rows) < 3:
        raise ClassifierError("model file needs lambda, bias and at least one weight")
    try:
        values = [float(r) for r in rows]
    except ValueError as exc:
        raise ClassifierError(f"model file: {exc}") from None
    if not all(math.isfinite(v) for v in values):
        raise ClassifierError("model file holds non-finite numbers")
    return SvmModel(np.array(values[2:]), values[1], values[0])


def predict(model: SvmModel, v: WeightVector | Sequence[float]) -> int:
    """1 iff ``w . v + b > 0``; a tie is a non-duplicate."""
    x = v.weights if isinstance(v, WeightVector) else v
    return 1 if model.decision(x) > 0.0 else 0


def objective(w: np.ndarray, b: float, X: np.ndarray, y: np.ndarray, lam: float) -> float:
    margins = 1.0 - y * (X @ w + b)
    return 0.5 * lam * float(w @ w) + float(np.mean(np.maximum(margins, 0.0)))


def train_svm(data: Sequence[tuple[Sequence[float], int]], lam: float = 0.01, epochs: int = 200,
              seed: int = 0) -> SvmModel:
    """Seeded stochastic subgradient descent on the regularised hinge loss.

    Step size at update ``t`` is ``1 / (lam * (t + 1/lam))`` so the first
    step is below one.  An epoch whose end point has a higher objective
    than the best so far is rolled back, so ``history`` (the objective of
    the kept weights after each epoch) never increases.
    """
    if lam <= 0:
        raise ClassifierError("lambda must be positive")
    if epochs <= 0:
        raise ClassifierError("epochs must be positive")
    if not data:
        raise ClassifierError("empty training set")
    X = np.array([list(x.weights if isinstance(x, WeightVector) else x) for x, _ in data], dtype=float)
    labels = [int(label) for _, label in data]
    if X.ndim != 2 or X.shape[1] == 0:
        raise ClassifierError("training vectors must be non-empty and of equal length")
    if set(labels) - {0, 1}:
        raise ClassifierError("labels must be 0 or 1")
    if len(set(labels)) < 2:
        raise ClassifierError("training data needs both labels")
    if not np.all(np.isfinite(X)):
        raise ClassifierError("training vectors hold non-finite values")
    if np.all(X == X[0]):
        raise DegenerateTrainingError("all training vectors are identical but labels differ")
    y = np.where(np.array(labels) == 1, 1.0, -1.0)
    n, d = X.shape
    rng = np.random.default_rng(seed)
    w, b = np.zeros(d), 0.0
    best = objective(w, b, X, y, lam)
    t0 = 1.0 / lam
    t = 0
    history = []
    for _ in range(epochs):
        cw, cb = w.copy(), b
        for i in rng.permutation(n):
            t += 1
            eta = 1.0 / (lam * (t + t0))
            xi, yi = X[i], y[i]
            hinge_active = yi * (float(xi @ cw) + cb) < 1.0
            cw *= 1.0 - eta * lam
            if hinge_active:
                cw += eta * yi * xi
                cb += eta * yi
        value = objective(cw, cb, X, y, lam)
        if value <= best:
            w, b, best = cw, cb, value
        history.append(best)
    return SvmModel(w, b, lam, epochs, seed, history)


def accuracy(model: SvmModel, data: Iterable[tuple[Sequence[float], int]]) -> float | None:
    data = list(data)
    if not data:
        return None
    hits = sum(1 for x, label in data if predict(model, x) == int(label))
    return hits / len(data)


def split_training(data: Sequence, fraction: float = 0.8, seed: int = 0) -> tuple[list, list]:
    """Seeded split into (train, test); each side keeps at least one pair when possible."""
    if not 0.0 < fraction <= 1.0:
        raise ClassifierError("split fraction must be in (0, 1]")
    order = np.random.default_rng(seed).permutation(len(data))
    cut = int(round(fraction * len(data)))
    if 0 < len(data) and cut == 0:
        cut = 1
    return [data[i] for i in order[:cut]], [data[i] for i in order[cut:]]


@dataclass
class TrainingPairs:
    vectors: list[tuple[WeightVector, int]]
    skipped: list[Skipped]


def read_labeled_pairs(path: str | Path) -> list[tuple[int, int, int]]:
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh, delimiter="\t"), start=1):
            if not row or not "".join(row).strip():
                continue
            if len(row) != 3:
                raise ClassifierError(f"{path}:{lineno}: expected rid1, rid2, label")
            try:
                a, b, label = (int(x) for x in row)
            except ValueError:
                raise ClassifierError(f"{path}:{lineno}: non-integer field") from None
            if label not in (0, 1):
                raise ClassifierError(f"{path}:{lineno}: label must be 0 or 1")
            out.append((a, b, label))
    return out


def build_training_set(rows: Iterable[tuple[int, int, int]], relation: str, spec: FeatureSpec,
                       instance: Instance, cache: SimCache | None = None) -> TrainingPairs:
    table = instance.relation(relation)
    vectors, skipped = [], []
    for a, b, label in rows:
        if a not in table or b not in table:
            raise ClassifierError(f"training pair ({a}, {b}) references a missing {relation} record")
        wv = compute_weight_vector(table[a], table[b], spec, instance, cache)
        if isinstance(wv, Skipped):
            skipped.append(wv)
        else:
            vectors.append((wv, label))
    return TrainingPairs(vectors, skipped)


@dataclass
class Detection:
    duplicates: frozenset
    skipped: list[Skipped]


def detect_duplicates(model: SvmModel, pairs: Iterable[tuple[int, int]], spec: FeatureSpec,
                      instance: Instance, cache: SimCache | None = None) -> Detection:
    table = instance.relation(spec.relation)
    dups, skipped = set(), []
    for a, b in sorted(pairs):
        wv = compute_weight_vector(table[a], table[b], spec, instance, cache)
        if isinstance(wv, Skipped):
            skipped.append(wv)
        elif predict(model, wv) == 1:
            dups.add((wv.rid1, wv.rid2))
    return Detection(frozenset(dups), skipped)
