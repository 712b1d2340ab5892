"""Attribute similarity kernels and the materialised similarity cache.

Three kernels, chosen by an attribute's domain tag:

* ``text``         -> TF-IDF cosine over the column's own document frequencies
* ``short-string`` -> Jaro-Winkler (prefix <= 4, scaling 0.1)
* ``numeric``      -> 1 - edit distance / max length of the decimal renderings

:func:`build_sim_cache` keeps, per :class:`SimSpec`, every unordered pair of
distinct column values whose weight reaches the threshold, together with the
weight itself so feature extraction can reuse it.
"""
from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from . import kernels
from .errors import SimilarityError
from .schema import Instance, Schema, Value

KERNEL_FOR_DOMAIN = {
    "text": "tfidf-cosine",
    "short-string": "jaro-winkler",
    "numeric": "numeric-edit",
}
KERNELS = frozenset(KERNEL_FOR_DOMAIN.values())

_TOKEN_RE = re.compile(r"[^\W_]+")
_SIM_LINE_RE = re.compile(
    r"^sim\s+([A-Za-z_]\w*)\.([A-Za-z_]\w*)\s+([a-z-]+)\s+(\S+)(?:\s+as\s+([A-Za-z_][\w-]*))?\s*;?\s*$"
)


def tokenize(text: str) -> list[str]:
    """Lower-case alphanumeric runs; no stemming."""
    return _TOKEN_RE.findall(text.lower())


class TfIdfCorpus:
    """Document frequencies of one column; IDF = ln(N / df)."""

    def __init__(self, documents: Iterable[str]):
        self.size = 0
        self.df: Counter[str] = Counter()
        for doc in documents:
            if doc is None:
                continue
            self.size += 1
            self.df.update(set(tokenize(str(doc))))

    def idf(self, token: str) -> float:
        n = max(self.size, 1)
        return math.log(n / max(self.df.get(token, 0), 1))

    def unit_vector(self, text: str) -> dict[str, float]:
        """L2-normalised TF-IDF weights keyed by token (empty if the norm is zero)."""
        counts = Counter(tokenize(text))
        raw = {tok: tf * self.idf(tok) for tok, tf in sorted(counts.items())}
        norm = math.sqrt(sum(w * w for w in raw.values()))
        if norm == 0.0:
            return {}
        return {tok: w / norm for tok, w in raw.items() if w != 0.0}


def _clamp(w: float) -> float:
    return 0.0 if w < 0.0 else 1.0 if w > 1.0 else w


def tfidf_cosine(a: str, b: str, corpus: TfIdfCorpus) -> float:
    ta, tb = tokenize(a), tokenize(b)
    if not ta or not tb:
        return 0.0
    if sorted(ta) == sorted(tb):
        return 1.0
    va, vb = corpus.unit_vector(a), corpus.unit_vector(b)
    acc = 0.0
    for tok in sorted(va.keys() & vb.keys()):
        acc = acc + va[tok] * vb[tok]
    return _clamp(acc)


def jaro_winkler(a: str, b: str) -> float:
    return kernels.jaro_winkler(a, b)


def jaro(a: str, b: str) -> float:
    return kernels.jaro(a, b)


def numeric_edit(a: int, b: int) -> float:
    if a is None or b is None:
        raise SimilarityError("numeric_edit is undefined for null values")
    return kernels.numeric_edit(str(a), str(b))


@dataclass(frozen=True)
class SimSpec:
    name: str
    relation: str
    attribute: str
    kernel: str
    threshold: float

    def __post_init__(self):
        if self.kernel not in KERNELS:
            raise SimilarityError(f"unknown kernel {self.kernel!r}")


def default_spec_name(attribute: str) -> str:
    return f"{attribute}Sim"


def parse_sim_specs(config_text: str, schema: Schema) -> dict[str, SimSpec]:
    """Read ``sim Rel.attr kernel threshold [as name]`` lines; other lines are ignored."""
    specs: dict[str, SimSpec] = {}
    for lineno, raw in enumerate(config_text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line.startswith("sim ") and line != "sim":
            continue
        m = _SIM_LINE_RE.match(line)
        if not m:
            raise SimilarityError(f"line {lineno}: malformed sim declaration")
        rel, attr, kernel, threshold_text, name = m.groups()
        if not schema.has_relation(rel):
            raise SimilarityError(f"line {lineno}: unknown relation {rel!r}")
        decl = schema.relation(rel)
        if attr not in decl.domains:
            raise SimilarityError(f"line {lineno}: unknown attribute {rel}.{attr}")
        if kernel not in KERNELS:
            raise SimilarityError(f"line {lineno}: unknown kernel {kernel!r}")
        expected = KERNEL_FOR_DOMAIN.get(decl.domains[attr])
        if kernel != expected:
            raise SimilarityError(
                f"line {lineno}: {rel}.{attr} has domain {decl.domains[attr]!r}, which requires {expected}"
            )
        try:
            threshold = float(threshold_text)
        except ValueError:
            raise SimilarityError(f"line {lineno}: threshold {threshold_text!r} is not a number") from None
        if not 0.0 <= threshold <= 1.0:
            raise SimilarityError(f"line {lineno}: threshold {threshold} outside [0, 1]")
        name = name or default_spec_name(attr)
        if name in specs:
            raise SimilarityError(f"line {lineno}: duplicate sim spec {name!r}")
        specs[name] = SimSpec(name, rel, attr, kernel, threshold)
    return specs


def column_corpus(instance: Instance, relation: str, attribute: str) -> TfIdfCorpus:
    key = ("tfidf", relation, attribute)
    corpus = instance.memo.get(key)
    if corpus is None:
        corpus = TfIdfCorpus(v for v in instance.column(relation, attribute) if v is not None)
        instance.memo[key] = corpus
    return corpus


def value_similarity(kernel: str, a: Value, b: Value, corpus: TfIdfCorpus | None = None) -> float:
    """Weight of two non-null values under ``kernel``."""
    if a is None or b is None:
        raise SimilarityError("similarity of a null value is undefined")
    if kernel == "jaro-winkler":
        return kernels.jaro_winkler(str(a), str(b))
    if kernel == "numeric-edit":
        return kernels.numeric_edit(str(a), str(b))
    if kernel == "tfidf-cosine":
        if corpus is None:
            raise SimilarityError("tfidf-cosine needs a corpus")
        return tfidf_cosine(str(a), str(b), corpus)
    raise SimilarityError(f"unknown kernel {kernel!r}")


def _pair_key(a, b):
    return (a, b) if a <= b else (b, a)


@dataclass
class SimCache:
    """Above-threshold value pairs per spec; reflexive pairs are implied, never stored."""

    specs: dict[str, SimSpec]
    weights: dict[str, dict[tuple, float]] = field(default_factory=dict)
    empty_token_values: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        for name in self.specs:
            self.weights.setdefault(name, {})
        self._neighbors: dict[str, dict] = {}
        for name, pairs in self.weights.items():
            nb: dict = {}
            for a, b in pairs:
                nb.setdefault(a, set()).add(b)
                nb.setdefault(b, set()).add(a)
            self._neighbors[name] = nb

    @classmethod
    def from_weights(cls, specs: Mapping[str, SimSpec], weights: Mapping[str, Mapping[tuple, float]]) -> "SimCache":
        table = {}
        for name, pairs in weights.items():
            spec = specs[name]
            table[name] = {
                _pair_key(a, b): float(w) for (a, b), w in pairs.items() if a != b and w >= spec.threshold
            }
        return cls(dict(specs), table)

    def spec(self, name: str) -> SimSpec:
        try:
            return self.specs[name]
        except KeyError:
            raise SimilarityError(f"unknown sim spec {name!r}") from None

    def similar(self, name: str, a: Value, b: Value) -> bool:
        if a is None or b is None:
            return False
        if a == b:
            return self.spec(name).threshold <= 1.0
        return _pair_key(a, b) in self.weights[name]

    def weight(self, name: str, a: Value, b: Value) -> float | None:
        """Stored weight of a cached pair, 1.0 for equal values, else ``None``."""
        if a is None or b is None:
            return None
        if a == b:
            return 1.0
        return self.weights[name].get(_pair_key(a, b))

    def neighbors(self, name: str, a: Value) -> list:
        """Values similar to ``a`` (including ``a`` itself when the threshold allows)."""
        if a is None:
            return []
        out = sorted(self._neighbors[name].get(a, ()))
        if self.spec(name).threshold <= 1.0:
            out.append(a)
        return out

    def for_attribute(self, relation: str, attribute: str) -> list[str]:
        return [n for n, s in self.specs.items() if s.relation == relation and s.attribute == attribute]

    def __len__(self) -> int:
        return sum(len(p) for p in self.weights.values())

    def dump(self) -> str:
        """TSV ``relation attribute value1 value2 weight``, one pair per line."""
        lines = []
        for name in sorted(self.specs):
            spec = self.specs[name]
            for (a, b), w in sorted(self.weights[name].items()):
                lines.append(f"{spec.relation}\t{spec.attribute}\t{a}\t{b}\t{w:.10f}")
        return "".join(line + "\n" for line in lines)


def _tfidf_rows(values: Sequence[str], corpus: TfIdfCorpus):
    vectors = [corpus.unit_vector(v) for v in values]
    vocab = {tok: i for i, tok in enumerate(sorted({t for vec in vectors for t in vec}))}
    indptr, indices, data = [0], [], []
    for vec in vectors:
        for tok in sorted(vec):
            indices.append(vocab[tok])
            data.append(vec[tok])
        indptr.append(len(indices))
    sig_ids: dict[tuple, int] = {}
    signature = []
    for v in values:
        toks = tuple(sorted(tokenize(v)))
        signature.append(sig_ids.setdefault(toks, len(sig_ids)) if toks else -1)
    return indptr, indices, data, signature


def spec_pairs(spec: SimSpec, instance: Instance, length_filter: bool = False) -> tuple[list[tuple], int]:
    """Above-threshold ``(a, b, weight)`` triples for one spec, plus the count of token-less values."""
    column = [v for v in instance.column(spec.relation, spec.attribute) if v is not None]
    values = sorted(set(column))
    empty = 0
    if spec.kernel == "jaro-winkler":
        raw = kernels.jw_pairs([str(v) for v in values], spec.threshold, length_filter)
    elif spec.kernel == "numeric-edit":
        raw = kernels.edit_pairs([str(v) for v in values], spec.threshold, length_filter)
    else:
        texts = [str(v) for v in values]
        corpus = column_corpus(instance, spec.relation, spec.attribute)
        indptr, indices, data, signature = _tfidf_rows(texts, corpus)
        empty = sum(1 for s in signature if s < 0)
        raw = kernels.cosine_pairs(indptr, indices, data, signature, spec.threshold)
    return [(values[i], values[j], w) for i, j, w in raw], empty


def build_sim_cache(instance: Instance, specs: Mapping[str, SimSpec] | Iterable[SimSpec],
                    length_filter: bool = False) -> SimCache:
    if not isinstance(specs, Mapping):
        specs = {s.name: s for s in specs}
    weights: dict[str, dict[tuple, float]] = {}
    empties: dict[str, int] = {}
    for name, spec in specs.items():
        decl = instance.schema.relation(spec.relation)
        decl.domain(spec.attribute)
        pairs, empty = spec_pairs(spec, instance, length_filter)
        weights[name] = {(a, b): w for a, b, w in pairs}
        empties[name] = empty
    return SimCache(dict(specs), weights, empties)
