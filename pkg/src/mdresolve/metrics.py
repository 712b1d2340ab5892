"""Blocking quality measures and key-based (standard) blocking."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

from .chase import BlockAssignment, enforce_blocking
from .errors import ResolveError
from .mdlang import AttrRef, BlockingMD, HeadAtom, MDSet, SimAtom, validate_mds
from .schema import Instance
from .similarity import SimCache


def _canon(pairs: Iterable[tuple[int, int]]) -> set[tuple[int, int]]:
    return {(a, b) if a < b else (b, a) for a, b in pairs}


def total_pairs(n: int) -> int:
    return n * (n - 1) // 2


def reduction_ratio(candidates: Iterable, n: int) -> float:
    """Share of the ``n(n-1)/2`` record pairs that blocking removes."""
    if n < 2:
        raise ResolveError(f"reduction ratio needs at least two records, got {n}")
    return 1.0 - len(_canon(candidates)) / total_pairs(n)


def blocking_quality(candidates: Iterable, gold: Iterable) -> tuple[float | None, float | None]:
    """(recall, precision); ``None`` where the denominator is zero."""
    cand, truth = _canon(candidates), _canon(gold)
    hits = len(cand & truth)
    recall = hits / len(truth) if truth else None
    precision = hits / len(cand) if cand else None
    return recall, precision


@dataclass(frozen=True)
class MetricsReport:
    records: int
    total_pairs: int
    candidate_pairs: int
    gold_pairs: int
    true_positives: int
    reduction_ratio: float | None
    recall: float | None
    precision: float | None

    def lines(self, prefix: str) -> list[str]:
        def fmt(v):
            return "undefined" if v is None else f"{v:.6f}"

        return [
            f"{prefix}.records={self.records}",
            f"{prefix}.total_pairs={self.total_pairs}",
            f"{prefix}.candidate_pairs={self.candidate_pairs}",
            f"{prefix}.gold_pairs={self.gold_pairs}",
            f"{prefix}.true_positive_candidates={self.true_positives}",
            f"{prefix}.reduction_ratio={fmt(self.reduction_ratio)}",
            f"{prefix}.recall={fmt(self.recall)}",
            f"{prefix}.precision={fmt(self.precision)}",
        ]


def evaluate(candidates: Iterable, gold: Iterable, n: int) -> MetricsReport:
    cand, truth = _canon(candidates), _canon(gold)
    recall, precision = blocking_quality(cand, truth)
    rr = reduction_ratio(cand, n) if n >= 2 else None
    return MetricsReport(n, total_pairs(n), len(cand), len(truth), len(cand & truth), rr, recall, precision)


def pooled(reports: Iterable[MetricsReport]) -> MetricsReport:
    """Sum the counts of several relations and recompute the ratios."""
    reports = list(reports)
    n = sum(r.records for r in reports)
    total = sum(r.total_pairs for r in reports)
    cand = sum(r.candidate_pairs for r in reports)
    gold = sum(r.gold_pairs for r in reports)
    hits = sum(r.true_positives for r in reports)
    return MetricsReport(
        n, total, cand, gold, hits,
        1.0 - cand / total if total else None,
        hits / gold if gold else None,
        hits / cand if cand else None,
    )


def read_gold(path: str | Path) -> dict[str, set[tuple[int, int]]]:
    """TSV ``relation rid1 rid2``."""
    out: dict[str, set[tuple[int, int]]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh, delimiter="\t"), start=1):
            if not row or not "".join(row).strip():
                continue
            if len(row) != 3:
                raise ResolveError(f"{path}:{lineno}: expected relation, rid1, rid2")
            try:
                a, b = int(row[1]), int(row[2])
            except ValueError:
                raise ResolveError(f"{path}:{lineno}: non-integer rid") from None
            out.setdefault(row[0], set()).add((a, b) if a < b else (b, a))
    return out


def check_gold(gold: Mapping[str, Iterable[tuple[int, int]]], instance: Instance) -> None:
    for rel, pairs in gold.items():
        table = instance.relation(rel)
        for a, b in pairs:
            if a not in table or b not in table:
                raise ResolveError(f"gold pair ({a}, {b}) references a missing {rel} record")


def key_mds(keys: Mapping[str, Iterable[str]], cache: SimCache, instance: Instance) -> MDSet:
    """One single-relation MD per keyed relation: all key similarities must hold.

    A key item is a sim spec name or an attribute with exactly one spec.
    """
    mds = []
    for rel in sorted(keys):
        decl = instance.schema.relation(rel)
        atoms = []
        for item in keys[rel]:
            if item in cache.specs and cache.specs[item].relation == rel:
                spec = cache.specs[item]
            else:
                if item not in decl.domains:
                    raise ResolveError(f"blocking key {rel}.{item} is not an attribute or sim spec")
                names = cache.for_attribute(rel, item)
                if len(names) != 1:
                    raise ResolveError(f"blocking key {rel}.{item} needs exactly one sim spec, found {len(names)}")
                spec = cache.specs[names[0]]
            atoms.append(SimAtom(AttrRef("x1", spec.attribute), AttrRef("x2", spec.attribute), spec.name))
        if atoms:
            mds.append(BlockingMD(f"key-{rel}", (HeadAtom(rel, "x1"), HeadAtom(rel, "x2")), tuple(atoms), ("x1", "x2")))
    return validate_mds(MDSet(tuple(mds)), instance.schema, cache.specs)


def standard_blocking(instance: Instance, keys: Mapping[str, Iterable[str]], cache: SimCache) -> BlockAssignment:
    """Records whose key values are all similar share a block (closed transitively)."""
    return enforce_blocking(instance, key_mds(keys, cache, instance), cache)
