"""Matching functions and the merge of classified duplicates.

Every shipped matching function is idempotent, commutative and associative
on its canonical values, with null as the bottom element.  Because of that,
enforcing the merge rules over a fixed duplicate relation converges to the
componentwise least upper bound, which :func:`merge_duplicates` computes
directly: connected components, then one fold per component and attribute.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Mapping

from .errors import MatchingFunctionError, MergeError
from .schema import Instance, Value, format_relation_csv
from .unionfind import MaxUnionFind


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _require(name: str, ok: Callable, a, b) -> None:
    for v in (a, b):
        if v is not None and not ok(v):
            raise MatchingFunctionError(f"{name} does not apply to {v!r}")


def _longest(a: str, b: str) -> str:
    if len(a) != len(b):
        return a if len(a) > len(b) else b
    return a if a >= b else b


def _union_items(v: str) -> set[str]:
    return {item.strip() for item in v.split(",") if item.strip()}


def _join_items(items: Iterable[str]) -> str | None:
    items = sorted(items)
    return ", ".join(items) if items else None


@dataclass(frozen=True)
class MatchingFunction:
    name: str
    domains: frozenset
    combine: Callable[[Value, Value], Value]
    accepts: Callable[[Value], bool]
    canonical: Callable[[Value], Value] = lambda v: v

    def __call__(self, a: Value, b: Value) -> Value:
        return apply_mf(self, a, b)


def _mf_longest(a, b):
    return _longest(a, b)


def _mf_max(a, b):
    return a if a >= b else b


def _mf_union(a, b):
    return _join_items(_union_items(a) | _union_items(b))


def _mf_prefer_non_null(a, b):
    if type(a) is not type(b):
        raise MatchingFunctionError(f"prefer-non-null cannot combine {a!r} and {b!r}")
    return _longest(a, b) if isinstance(a, str) else max(a, b)


def _canonical_union(v):
    return None if v is None else _join_items(_union_items(v))


MATCHING_FUNCTIONS: dict[str, MatchingFunction] = {
    "longest": MatchingFunction(
        "longest", frozenset({"text", "short-string"}), _mf_longest, lambda v: isinstance(v, str)
    ),
    "max": MatchingFunction("max", frozenset({"numeric"}), _mf_max, _is_int),
    "union": MatchingFunction(
        "union", frozenset({"text", "short-string"}), _mf_union, lambda v: isinstance(v, str), _canonical_union
    ),
    "prefer-non-null": MatchingFunction(
        "prefer-non-null",
        frozenset({"text", "short-string", "numeric"}),
        _mf_prefer_non_null,
        lambda v: isinstance(v, str) or _is_int(v),
    ),
}


def get_mf(mf: str | MatchingFunction) -> MatchingFunction:
    if isinstance(mf, MatchingFunction):
        return mf
    try:
        return MATCHING_FUNCTIONS[mf]
    except KeyError:
        raise MatchingFunctionError(f"unknown matching function {mf!r}") from None


def apply_mf(mf: str | MatchingFunction, a: Value, b: Value) -> Value:
    """Combine two values; null is absorbed by anything.

    >>> apply_mf("union", "West Africa, Illness", "Africa, Illness")
    'Africa, Illness, West Africa'
    """
    mf = get_mf(mf)
    _require(mf.name, mf.accepts, a, b)
    if a is None:
        return mf.canonical(b)
    if b is None:
        return mf.canonical(a)
    return mf.combine(a, b)


def precedes(mf: str | MatchingFunction, a: Value, b: Value) -> bool:
    """``a`` is below ``b`` in the order the function induces."""
    return apply_mf(mf, a, b) == b


@dataclass
class ResolvedInstance:
    """Merged records under their original rids, plus the survivor of each class."""

    full: Instance
    survivors: dict[str, dict[int, int]]

    def canonical(self) -> Instance:
        out = {}
        for rel in self.full:
            keep = self.survivors.get(rel, {})
            out[rel] = {rid: rec for rid, rec in self.full.relation(rel).items() if keep.get(rid, rid) == rid}
        return Instance(self.full.schema, out)

    def dump_survivors(self, relation: str) -> str:
        table = self.survivors.get(relation, {})
        lines = [f"{rid}\t{table.get(rid, rid)}" for rid in self.full.rids(relation)]
        return "".join(line + "\n" for line in lines)

    def write(self, out_dir: str | Path) -> list[Path]:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        canonical = self.canonical()
        written = []
        for rel in self.full:
            path = out_dir / f"{rel}.csv"
            path.write_text(format_relation_csv(canonical, rel), encoding="utf-8")
            written.append(path)
            path = out_dir / f"{rel}.survivors.tsv"
            path.write_text(self.dump_survivors(rel), encoding="utf-8")
            written.append(path)
        return written


DuplicateSet = Mapping[str, Iterable[tuple[int, int]]]


def components(rids: Iterable[int], pairs: Iterable[tuple[int, int]]) -> list[list[int]]:
    uf = MaxUnionFind(rids)
    for a, b in pairs:
        uf.union(a, b)
    return [members for _, members in sorted(uf.groups().items())]


def merge_duplicates(instance: Instance, dups: DuplicateSet,
                     mfs: Mapping[str, Mapping[str, str | MatchingFunction]]) -> ResolvedInstance:
    """Fold each attribute's matching function over every duplicate component.

    ``mfs`` maps relation -> attribute -> matching function; attributes not
    listed keep their values.  Values are folded in ascending rid order.
    """
    relations = {rel: dict(recs) for rel, recs in ((r, instance.relation(r)) for r in instance)}
    survivors: dict[str, dict[int, int]] = {}
    for rel in sorted(dups):
        table = instance.relation(rel)
        pairs = sorted({(min(a, b), max(a, b)) for a, b in dups[rel]})
        for a, b in pairs:
            if a not in table or b not in table:
                raise MergeError(f"duplicate pair ({a}, {b}) references a missing {rel} record")
        decl = instance.schema.relation(rel)
        functions = {}
        for attr, mf in mfs.get(rel, {}).items():
            decl.domain(attr)
            functions[attr] = get_mf(mf)
        survivors[rel] = {}
        for members in components(table, pairs):
            head = members[0]
            for rid in members:
                survivors[rel][rid] = head
            if len(members) == 1 or not functions:
                continue
            merged = {}
            for attr, mf in functions.items():
                acc = table[members[0]].values[attr]
                for rid in members[1:]:
                    acc = apply_mf(mf, acc, table[rid].values[attr])
                merged[attr] = acc
            for rid in members:
                rec = table[rid]
                relations[rel][rid] = rec.replace(values={**rec.values, **merged})
    return ResolvedInstance(Instance(instance.schema, relations), survivors)


def mfs_from_mdset(merges: Mapping) -> dict[str, dict[str, str]]:
    """Relation -> attribute -> function name, from parsed ``merge`` statements."""
    return {rel: spec.as_dict() for rel, spec in merges.items()}


def format_duplicates(dups: Mapping[str, Iterable[tuple[int, int]]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, delimiter="\t", lineterminator="\n")
    for rel in sorted(dups):
        for a, b in sorted(dups[rel]):
            writer.writerow([rel, a, b])
    return buf.getvalue()
