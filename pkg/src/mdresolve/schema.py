"""Entity schemas, delimited-text ingestion and instance validation.

Schema files are line oriented::

    relation Author(aid: key, name: short-string, affiliation: text)
    foreign PaperAuthor.aid -> Author.aid
    sim Author.name jaro-winkler 0.8

``sim`` lines belong to :mod:`mdresolve.similarity` and are skipped here.
"""
from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Union

from .errors import IngestError, SchemaError

Value = Union[str, int, None]

DOMAIN_TAGS = frozenset({"key", "text", "short-string", "numeric"})
INTEGER_TAGS = frozenset({"key", "numeric"})

_IDENT = r"[A-Za-z_][A-Za-z0-9_]*"
_RELATION_RE = re.compile(rf"^relation\s+({_IDENT})\s*\((.*)\)\s*;?\s*$")
_ATTR_RE = re.compile(rf"^({_IDENT})\s*:\s*([A-Za-z-]+)$")
_FOREIGN_RE = re.compile(rf"^foreign\s+({_IDENT})\.({_IDENT})\s*->\s*({_IDENT})\.({_IDENT})\s*;?\s*$")


@dataclass(frozen=True)
class RelationDecl:
    name: str
    attributes: tuple[str, ...]
    domains: Mapping[str, str]
    key: str

    @property
    def key_position(self) -> int:
        return self.attributes.index(self.key)

    @property
    def arity(self) -> int:
        return len(self.attributes)

    def domain(self, attribute: str) -> str:
        try:
            return self.domains[attribute]
        except KeyError:
            raise SchemaError(f"relation {self.name} has no attribute {attribute!r}") from None


@dataclass(frozen=True)
class ForeignKey:
    relation: str
    attribute: str
    target_relation: str
    target_attribute: str

    def __str__(self) -> str:
        return f"{self.relation}.{self.attribute} -> {self.target_relation}.{self.target_attribute}"


@dataclass(frozen=True)
class Schema:
    relations: tuple[RelationDecl, ...]
    foreign_keys: tuple[ForeignKey, ...] = ()

    def __post_init__(self):
        seen = set()
        for rel in self.relations:
            if rel.name in seen:
                raise SchemaError(f"duplicate relation {rel.name!r}")
            seen.add(rel.name)

    @property
    def relation_names(self) -> tuple[str, ...]:
        return tuple(rel.name for rel in self.relations)

    def relation(self, name: str) -> RelationDecl:
        for rel in self.relations:
            if rel.name == name:
                return rel
        raise SchemaError(f"unknown relation {name!r}")

    def has_relation(self, name: str) -> bool:
        return any(rel.name == name for rel in self.relations)


def _strip_comment(line: str) -> str:
    return line.split("#", 1)[0].strip()


def _parse_relation(match: re.Match, lineno: int) -> RelationDecl:
    name, body = match.group(1), match.group(2)
    attributes: list[str] = []
    domains: dict[str, str] = {}
    for chunk in body.split(","):
        chunk = chunk.strip()
        m = _ATTR_RE.match(chunk)
        if not m:
            raise SchemaError(f"line {lineno}: malformed attribute declaration {chunk!r}")
        attr, tag = m.groups()
        if attr in domains:
            raise SchemaError(f"line {lineno}: duplicate attribute {attr!r} in relation {name}")
        if tag not in DOMAIN_TAGS:
            raise SchemaError(f"line {lineno}: unknown domain tag {tag!r} for {name}.{attr}")
        attributes.append(attr)
        domains[attr] = tag
    keys = [a for a in attributes if domains[a] == "key"]
    if not keys:
        raise SchemaError(f"line {lineno}: relation {name} has no key attribute")
    if len(keys) > 1:
        raise SchemaError(f"line {lineno}: relation {name} declares {len(keys)} key attributes")
    return RelationDecl(name, tuple(attributes), dict(domains), keys[0])


def load_schema(config_text: str) -> Schema:
    """Parse ``relation`` and ``foreign`` declarations into a validated :class:`Schema`."""
    relations: list[RelationDecl] = []
    foreign: list[tuple[int, ForeignKey]] = []
    for lineno, raw in enumerate(config_text.splitlines(), start=1):
        line = _strip_comment(raw)
        if not line:
            continue
        directive = line.split(None, 1)[0]
        if directive == "relation":
            m = _RELATION_RE.match(line)
            if not m:
                raise SchemaError(f"line {lineno}: malformed relation declaration")
            rel = _parse_relation(m, lineno)
            if any(r.name == rel.name for r in relations):
                raise SchemaError(f"line {lineno}: duplicate relation {rel.name!r}")
            relations.append(rel)
        elif directive == "foreign":
            m = _FOREIGN_RE.match(line)
            if not m:
                raise SchemaError(f"line {lineno}: malformed foreign key declaration")
            foreign.append((lineno, ForeignKey(*m.groups())))
        elif directive == "sim":
            continue
        else:
            raise SchemaError(f"line {lineno}: unknown directive {directive!r}")

    schema = Schema(tuple(relations))
    for lineno, fk in foreign:
        for rel_name, attr in ((fk.relation, fk.attribute), (fk.target_relation, fk.target_attribute)):
            if not schema.has_relation(rel_name):
                raise SchemaError(f"line {lineno}: foreign key references unknown relation {rel_name!r}")
            if attr not in schema.relation(rel_name).domains:
                raise SchemaError(f"line {lineno}: foreign key references unknown attribute {rel_name}.{attr}")
    return Schema(tuple(relations), tuple(fk for _, fk in foreign))


@dataclass(frozen=True)
class Record:
    rid: int
    values: Mapping[str, Value]
    block: int

    def __getitem__(self, attribute: str) -> Value:
        return self.values[attribute]

    def replace(self, **changes) -> "Record":
        values = changes.pop("values", self.values)
        block = changes.pop("block", self.block)
        if changes:
            raise TypeError(f"unexpected fields {sorted(changes)}")
        return Record(self.rid, values, block)


class Instance:
    """Per-relation map rid -> :class:`Record`; treated as immutable once built."""

    def __init__(self, schema: Schema, relations: Mapping[str, Mapping[int, Record]] | None = None):
        self.schema = schema
        relations = relations or {}
        unknown = set(relations) - set(schema.relation_names)
        if unknown:
            raise SchemaError(f"instance mentions undeclared relations {sorted(unknown)}")
        self._relations: dict[str, dict[int, Record]] = {
            name: dict(sorted(relations.get(name, {}).items())) for name in schema.relation_names
        }
        # derived, value-only caches (indexes, corpora); safe because records never change
        self.memo: dict = {}

    def relation(self, name: str) -> Mapping[int, Record]:
        try:
            return self._relations[name]
        except KeyError:
            raise SchemaError(f"unknown relation {name!r}") from None

    def records(self, name: str) -> list[Record]:
        return list(self.relation(name).values())

    def rids(self, name: str) -> list[int]:
        return list(self.relation(name))

    def record(self, name: str, rid: int) -> Record | None:
        return self.relation(name).get(rid)

    def column(self, name: str, attribute: str) -> list[Value]:
        self.schema.relation(name).domain(attribute)
        return [rec.values[attribute] for rec in self.relation(name).values()]

    def size(self, name: str | None = None) -> int:
        if name is not None:
            return len(self.relation(name))
        return sum(len(r) for r in self._relations.values())

    def __iter__(self) -> Iterator[str]:
        return iter(self._relations)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Instance):
            return NotImplemented
        return self.schema == other.schema and self._relations == other._relations

    def __repr__(self) -> str:
        sizes = ", ".join(f"{k}={len(v)}" for k, v in self._relations.items())
        return f"Instance({sizes})"

    def combine(self, *others: "Instance") -> "Instance":
        merged = {k: dict(v) for k, v in self._relations.items()}
        for other in others:
            for name, recs in other._relations.items():
                clash = merged[name].keys() & recs.keys()
                if clash:
                    raise IngestError(f"duplicate rid {min(clash)} in relation {name}")
                merged[name].update(recs)
        return Instance(self.schema, merged)

    def with_blocks(self, blocks: Mapping[str, Mapping[int, int]]) -> "Instance":
        out = {}
        for name, recs in self._relations.items():
            assigned = blocks.get(name, {})
            out[name] = {rid: rec.replace(block=assigned.get(rid, rec.block)) for rid, rec in recs.items()}
        return Instance(self.schema, out)

    def with_records(self, name: str, records: Iterable[Record]) -> "Instance":
        out = dict(self._relations)
        out[name] = {rec.rid: rec for rec in records}
        return Instance(self.schema, out)


def make_record(decl: RelationDecl, row: Mapping[str, Value]) -> Record:
    values = {attr: row.get(attr) for attr in decl.attributes}
    rid = values[decl.key]
    if not isinstance(rid, int) or isinstance(rid, bool) or rid <= 0:
        raise IngestError(f"{decl.name}: key {decl.key} must be a positive integer, got {rid!r}")
    return Record(rid, values, rid)


def _convert(decl: RelationDecl, attr: str, text: str, where: str) -> Value:
    text = text.strip()
    if text == "":
        return None
    if decl.domains[attr] in INTEGER_TAGS:
        try:
            return int(text)
        except ValueError:
            kind = "key" if attr == decl.key else "numeric value"
            raise IngestError(f"{where}: non-integer {kind} {text!r} for {decl.name}.{attr}") from None
    return text


def parse_rows(rows: Iterable[list[str]], relation: str, schema: Schema, source: str = "<input>") -> Instance:
    decl = schema.relation(relation)
    records: dict[int, Record] = {}
    for lineno, row in enumerate(rows, start=1):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        where = f"{source}:{lineno}"
        if len(row) > decl.arity:
            raise IngestError(f"{where}: {len(row)} fields but {decl.name} declares {decl.arity}")
        padded = list(row) + [""] * (decl.arity - len(row))
        values = {attr: _convert(decl, attr, text, where) for attr, text in zip(decl.attributes, padded)}
        rid = values[decl.key]
        if rid is None:
            raise IngestError(f"{where}: missing key {decl.key}")
        if rid <= 0:
            raise IngestError(f"{where}: key must be positive, got {rid}")
        if rid in records:
            raise IngestError(f"{where}: duplicate rid {rid} in relation {decl.name}")
        records[rid] = Record(rid, values, rid)
    return Instance(schema, {relation: records})


def ingest_csv(path: str | Path, relation: str, schema: Schema) -> Instance:
    """Load one header-less CSV into an instance fragment holding only ``relation``."""
    path = Path(path)
    if not path.exists():
        raise IngestError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        return parse_rows(csv.reader(fh), relation, schema, source=str(path))


def ingest_text(text: str, relation: str, schema: Schema) -> Instance:
    return parse_rows(csv.reader(io.StringIO(text)), relation, schema)


def load_instance(schema: Schema, paths: Mapping[str, str | Path]) -> Instance:
    instance = Instance(schema)
    for relation, path in paths.items():
        instance = instance.combine(ingest_csv(path, relation, schema))
    return instance


def format_relation_csv(instance: Instance, relation: str) -> str:
    decl = instance.schema.relation(relation)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for rec in instance.records(relation):
        writer.writerow(["" if rec.values[a] is None else str(rec.values[a]) for a in decl.attributes])
    return buf.getvalue()


def export_csv(instance: Instance, relation: str, path: str | Path) -> None:
    Path(path).write_text(format_relation_csv(instance, relation), encoding="utf-8")


@dataclass(frozen=True)
class DanglingReference:
    foreign_key: ForeignKey
    rid: int
    value: Value


@dataclass
class ValidationReport:
    dangling: list[DanglingReference] = field(default_factory=list)
    null_density: dict[tuple[str, str], float] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.dangling

    def format(self) -> str:
        lines = [f"dangling_references={len(self.dangling)}"]
        for d in self.dangling:
            lines.append(f"dangling {d.foreign_key} rid={d.rid} value={d.value}")
        for (rel, attr), density in sorted(self.null_density.items()):
            lines.append(f"null_density {rel}.{attr}={density:.6f}")
        return "\n".join(lines) + "\n"


def validate_instance(instance: Instance, schema: Schema | None = None) -> ValidationReport:
    """Report dangling foreign-key values and the fraction of nulls per attribute."""
    schema = schema or instance.schema
    report = ValidationReport()
    for fk in schema.foreign_keys:
        targets = {v for v in instance.column(fk.target_relation, fk.target_attribute) if v is not None}
        for rec in instance.records(fk.relation):
            value = rec.values[fk.attribute]
            if value is not None and value not in targets:
                report.dangling.append(DanglingReference(fk, rec.rid, value))
    for decl in schema.relations:
        recs = instance.records(decl.name)
        for attr in decl.attributes:
            if recs:
                nulls = sum(1 for r in recs if r.values[attr] is None)
                report.null_density[(decl.name, attr)] = nulls / len(recs)
            else:
                report.null_density[(decl.name, attr)] = 0.0
    return report
