"""Rule language for blocking and merge matching dependencies.

Grammar (one statement per ``;``; ``#`` starts a comment)::

    md       := "block" headatom "," headatom "when" cond ("and" cond)*
                "then" "block(" var ")" "=" "block(" var ")" ";"
    headatom := relname var
    cond     := simatom | eqatom | relatom | blockeq
    simatom  := "sim(" var "." attr "," var "." attr "," simspec ")"
    eqatom   := var "." attr "=" var "." attr
    relatom  := relname "(" term ("," term)* ")"
    blockeq  := "block(" var ")" "=" "block(" var ")"
    term     := "_" | var | var "." attr
    merge    := "merge" relname "using" "match(" attr ")" "=" mfname
                ("," "match(" attr ")" "=" mfname)* ";"

Relation atoms join positionally: the i-th term is compared with the
relation's i-th attribute.  A variable in the key position denotes the
record itself, so ``block(v)`` may refer to it; head variables are record
variables of the head relation.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Union

from .errors import MDSyntaxError, MDValidationError
from .schema import Schema
from .similarity import SimSpec

BLOCK_ATTR = "Bl#"


@dataclass(frozen=True)
class Wildcard:
    def __str__(self) -> str:
        return "_"


WILDCARD = Wildcard()


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class AttrRef:
    var: str
    attr: str

    def __str__(self) -> str:
        if self.attr == BLOCK_ATTR:
            return f"block({self.var})"
        return f"{self.var}.{self.attr}"


Term = Union[Wildcard, Var, AttrRef]


@dataclass(frozen=True)
class SimAtom:
    left: AttrRef
    right: AttrRef
    spec: str

    def __str__(self) -> str:
        return f"sim({self.left}, {self.right}, {self.spec})"


@dataclass(frozen=True)
class EqAtom:
    left: AttrRef
    right: AttrRef

    def __str__(self) -> str:
        return f"{self.left} = {self.right}"


@dataclass(frozen=True)
class RelAtom:
    relation: str
    terms: tuple[Term, ...]

    def __str__(self) -> str:
        return f"{self.relation}({', '.join(map(str, self.terms))})"


@dataclass(frozen=True)
class BlockEq:
    left: str
    right: str

    def __str__(self) -> str:
        return f"block({self.left}) = block({self.right})"


Atom = Union[SimAtom, EqAtom, RelAtom, BlockEq]


@dataclass(frozen=True)
class HeadAtom:
    relation: str
    var: str

    def __str__(self) -> str:
        return f"{self.relation} {self.var}"


@dataclass(frozen=True)
class BlockingMD:
    id: str
    heads: tuple[HeadAtom, HeadAtom]
    body: tuple[Atom, ...]
    conclusion: tuple[str, str]

    @property
    def relation(self) -> str:
        return self.heads[0].relation

    @property
    def head_vars(self) -> tuple[str, str]:
        return self.heads[0].var, self.heads[1].var

    def atoms(self, kind) -> list:
        return [a for a in self.body if isinstance(a, kind)]

    def __str__(self) -> str:
        return format_md(self)


@dataclass(frozen=True)
class MergeSpec:
    relation: str
    functions: tuple[tuple[str, str], ...]

    def as_dict(self) -> dict[str, str]:
        return dict(self.functions)

    def __str__(self) -> str:
        parts = ", ".join(f"match({a})={mf}" for a, mf in self.functions)
        return f"merge {self.relation} using {parts};"


@dataclass(frozen=True)
class MDSet:
    mds: tuple[BlockingMD, ...] = ()
    merges: Mapping[str, MergeSpec] = field(default_factory=dict)
    validated: bool = False

    def __len__(self) -> int:
        return len(self.mds)

    def __eq__(self, other):
        if not isinstance(other, MDSet):
            return NotImplemented
        return self.mds == other.mds and dict(self.merges) == dict(other.merges)

    def by_id(self, md_id: str) -> BlockingMD:
        for md in self.mds:
            if md.id == md_id:
                return md
        raise KeyError(md_id)


# ---------------------------------------------------------------- lexer

_TOKEN_SPEC = [
    ("WS", r"[ \t\r]+"),
    ("NL", r"\n"),
    ("COMMENT", r"#[^\n]*"),
    ("IDENT", r"[A-Za-z_][A-Za-z0-9_]*(?:-[A-Za-z0-9_]+)*"),
    ("PUNCT", r"[(),.=;]"),
]
_TOKEN_RE = re.compile("|".join(f"(?P<{n}>{p})" for n, p in _TOKEN_SPEC))
KEYWORDS = frozenset({"block", "when", "and", "then", "sim", "merge", "using", "match"})


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise MDSyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "NL":
            line += 1
            line_start = m.end()
        elif kind in ("IDENT", "PUNCT"):
            tokens.append(Token(kind, m.group(), line, pos - line_start + 1))
        pos = m.end()
    tokens.append(Token("EOF", "", line, pos - line_start + 1))
    return tokens


# ---------------------------------------------------------------- parser

class _Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.pos = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, offset: int = 1) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def error(self, message: str, tok: Token | None = None):
        tok = tok or self.tok
        raise MDSyntaxError(message, tok.line, tok.col)

    def advance(self) -> Token:
        tok = self.tok
        self.pos += 1
        return tok

    def expect(self, text: str) -> Token:
        if self.tok.text != text or self.tok.kind == "EOF":
            found = self.tok.text or "end of input"
            self.error(f"expected {text!r}, found {found!r}")
        return self.advance()

    def ident(self, what: str) -> str:
        if self.tok.kind != "IDENT":
            self.error(f"expected {what}, found {self.tok.text or 'end of input'!r}")
        if self.tok.text in KEYWORDS:
            self.error(f"keyword {self.tok.text!r} cannot be used as {what}")
        return self.advance().text

    def parse(self) -> tuple[list[BlockingMD], list[tuple[MergeSpec, Token]]]:
        mds: list[BlockingMD] = []
        merges: list[tuple[MergeSpec, Token]] = []
        while self.tok.kind != "EOF":
            if self.tok.text == "block":
                mds.append(self.md(f"md{len(mds) + 1}"))
            elif self.tok.text == "merge":
                start = self.tok
                merges.append((self.merge(), start))
            else:
                self.error(f"expected 'block' or 'merge', found {self.tok.text!r}")
        return mds, merges

    def md(self, md_id: str) -> BlockingMD:
        self.expect("block")
        h1 = HeadAtom(self.ident("relation name"), self.ident("variable"))
        self.expect(",")
        h2 = HeadAtom(self.ident("relation name"), self.ident("variable"))
        self.expect("when")
        body = [self.cond()]
        while self.tok.text == "and":
            self.advance()
            body.append(self.cond())
        self.expect("then")
        left, right = self.block_pair()
        self.expect(";")
        return BlockingMD(md_id, (h1, h2), tuple(body), (left, right))

    def block_ref(self) -> str:
        self.expect("block")
        self.expect("(")
        var = self.ident("variable")
        self.expect(")")
        return var

    def block_pair(self) -> tuple[str, str]:
        left = self.block_ref()
        self.expect("=")
        return left, self.block_ref()

    def attr_ref(self) -> AttrRef:
        if self.tok.text == "block" and self.peek().text == "(":
            start = self.tok
            var = self.block_ref()
            self.error("similarity comparisons of block numbers are not allowed", start)
            return AttrRef(var, BLOCK_ATTR)  # pragma: no cover
        var = self.ident("variable")
        self.expect(".")
        return AttrRef(var, self.ident("attribute name"))

    def cond(self) -> Atom:
        tok = self.tok
        if tok.text == "sim" and self.peek().text == "(":
            self.advance()
            self.expect("(")
            left = self.attr_ref()
            self.expect(",")
            right = self.attr_ref()
            self.expect(",")
            spec = self.ident("sim spec name")
            self.expect(")")
            return SimAtom(left, right, spec)
        if tok.text == "block" and self.peek().text == "(":
            left, right = self.block_pair()
            return BlockEq(left, right)
        if tok.kind == "IDENT" and self.peek().text == "(":
            relation = self.ident("relation name")
            self.expect("(")
            terms = [self.term()]
            while self.tok.text == ",":
                self.advance()
                terms.append(self.term())
            self.expect(")")
            return RelAtom(relation, tuple(terms))
        if tok.kind == "IDENT" and self.peek().text == ".":
            left = self.attr_ref()
            self.expect("=")
            right = self.attr_ref()
            return EqAtom(left, right)
        self.error(f"expected a condition, found {tok.text or 'end of input'!r}")

    def term(self) -> Term:
        if self.tok.text == "_":
            self.advance()
            return WILDCARD
        name = self.ident("term")
        if self.tok.text == ".":
            self.advance()
            return AttrRef(name, self.ident("attribute name"))
        return Var(name)

    def merge(self) -> MergeSpec:
        self.expect("merge")
        relation = self.ident("relation name")
        self.expect("using")
        functions = [self.match_clause()]
        while self.tok.text == ",":
            self.advance()
            functions.append(self.match_clause())
        self.expect(";")
        return MergeSpec(relation, tuple(functions))

    def match_clause(self) -> tuple[str, str]:
        self.expect("match")
        self.expect("(")
        attr = self.ident("attribute name")
        self.expect(")")
        self.expect("=")
        return attr, self.ident("matching function name")


def parse_syntax(text: str) -> MDSet:
    """Parse without resolving names; the result is *not* validated."""
    mds, merges = _Parser(text).parse()
    table: dict[str, MergeSpec] = {}
    for spec, tok in merges:
        if spec.relation in table:
            raise MDSyntaxError(f"second merge statement for {spec.relation}", tok.line, tok.col)
        table[spec.relation] = spec
    return MDSet(tuple(mds), table, validated=False)


def parse_mds(text: str, schema: Schema, specs: Mapping[str, SimSpec],
              merge_functions: Mapping | None = None) -> MDSet:
    """Parse rule text and validate it against the schema and sim specs."""
    return validate_mds(parse_syntax(text), schema, specs, merge_functions)


# ---------------------------------------------------------------- printer

def format_md(md: BlockingMD) -> str:
    h1, h2 = md.heads
    body = " and ".join(str(a) for a in md.body)
    left, right = md.conclusion
    return f"block {h1}, {h2} when {body} then block({left}) = block({right});"


def format_mdset(mds: MDSet) -> str:
    lines = [format_md(md) for md in mds.mds]
    lines += [str(mds.merges[rel]) for rel in mds.merges]
    return "".join(line + "\n" for line in lines)


# ---------------------------------------------------------------- analysis

def _body_terms(md: BlockingMD) -> Iterator[Term]:
    for atom in md.body:
        if isinstance(atom, (SimAtom, EqAtom)):
            yield atom.left
            yield atom.right
        elif isinstance(atom, RelAtom):
            yield from atom.terms
        elif isinstance(atom, BlockEq):
            yield Var(atom.left)
            yield Var(atom.right)


def mentioned_vars(md: BlockingMD) -> set[str]:
    out = set()
    for term in _body_terms(md):
        if isinstance(term, Var):
            out.add(term.name)
        elif isinstance(term, AttrRef):
            out.add(term.var)
    return out


def record_vars(md: BlockingMD, schema: Schema) -> dict[str, str]:
    """Map each record variable to its relation; raises on conflicting bindings."""
    out: dict[str, str] = {}

    def bind(var: str, relation: str):
        prev = out.get(var)
        if prev is not None and prev != relation:
            raise MDValidationError(f"{md.id}: variable {var!r} denotes both a {prev} and a {relation} record")
        out[var] = relation

    for head in md.heads:
        bind(head.var, head.relation)
    for atom in md.atoms(RelAtom):
        if not schema.has_relation(atom.relation):
            raise MDValidationError(f"{md.id}: unknown relation {atom.relation!r}")
        decl = schema.relation(atom.relation)
        if len(atom.terms) != decl.arity:
            raise MDValidationError(
                f"{md.id}: {atom.relation} has {decl.arity} attributes, atom lists {len(atom.terms)}"
            )
        key_term = atom.terms[decl.key_position]
        if isinstance(key_term, Var):
            bind(key_term.name, atom.relation)
    return out


def _validate_md(md: BlockingMD, schema: Schema, specs: Mapping[str, SimSpec]) -> None:
    h1, h2 = md.heads
    for head in md.heads:
        if not schema.has_relation(head.relation):
            raise MDValidationError(f"{md.id}: unknown relation {head.relation!r}")
    if h1.relation != h2.relation:
        raise MDValidationError(f"{md.id}: head relations differ ({h1.relation} vs {h2.relation})")
    if h1.var == h2.var:
        raise MDValidationError(f"{md.id}: head variables must be distinct")
    if set(md.conclusion) != {h1.var, h2.var}:
        raise MDValidationError(
            f"{md.id}: conclusion block({md.conclusion[0]}) = block({md.conclusion[1]}) "
            f"must equate the head variables {h1.var} and {h2.var}"
        )
    if not md.body:
        raise MDValidationError(f"{md.id}: empty body")
    rvars = record_vars(md, schema)

    def check_ref(ref: AttrRef):
        if ref.var not in rvars:
            raise MDValidationError(f"{md.id}: {ref.var!r} in {ref} is not a record variable")
        if ref.attr == BLOCK_ATTR:
            return
        decl = schema.relation(rvars[ref.var])
        if ref.attr not in decl.domains:
            raise MDValidationError(f"{md.id}: unknown attribute {decl.name}.{ref.attr}")

    for atom in md.body:
        if isinstance(atom, SimAtom):
            check_ref(atom.left)
            check_ref(atom.right)
            if atom.spec not in specs:
                raise MDValidationError(f"{md.id}: unknown sim spec {atom.spec!r}")
            spec = specs[atom.spec]
            for ref in (atom.left, atom.right):
                if ref.attr == BLOCK_ATTR:
                    continue
                if (rvars[ref.var], ref.attr) != (spec.relation, spec.attribute):
                    raise MDValidationError(
                        f"{md.id}: {ref} is not {spec.relation}.{spec.attribute}, the attribute of {spec.name}"
                    )
        elif isinstance(atom, EqAtom):
            check_ref(atom.left)
            check_ref(atom.right)
        elif isinstance(atom, RelAtom):
            for term in atom.terms:
                if isinstance(term, AttrRef):
                    check_ref(term)
        elif isinstance(atom, BlockEq):
            for v in (atom.left, atom.right):
                if v not in rvars:
                    raise MDValidationError(f"{md.id}: block({v}) needs a record variable")
            if rvars[atom.left] != rvars[atom.right]:
                raise MDValidationError(
                    f"{md.id}: block({atom.left}) = block({atom.right}) compares blocks of different relations"
                )
    if not mentioned_vars(md) & {h1.var, h2.var}:
        raise MDValidationError(f"{md.id}: body never mentions {h1.var} or {h2.var}")


def _validate_merge(spec: MergeSpec, schema: Schema, merge_functions: Mapping) -> None:
    if not schema.has_relation(spec.relation):
        raise MDValidationError(f"merge: unknown relation {spec.relation!r}")
    decl = schema.relation(spec.relation)
    seen = set()
    for attr, mf_name in spec.functions:
        if attr not in decl.domains:
            raise MDValidationError(f"merge: unknown attribute {decl.name}.{attr}")
        if attr == decl.key:
            raise MDValidationError(f"merge: key attribute {decl.name}.{attr} cannot be merged")
        if attr in seen:
            raise MDValidationError(f"merge: {decl.name}.{attr} listed twice")
        seen.add(attr)
        mf = merge_functions.get(mf_name)
        if mf is None:
            raise MDValidationError(f"merge: unknown matching function {mf_name!r}")
        if decl.domains[attr] not in mf.domains:
            raise MDValidationError(
                f"merge: {mf_name} does not apply to {decl.name}.{attr} (domain {decl.domains[attr]})"
            )


@dataclass
class InteractionReport:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def check_interaction_free(mds: MDSet) -> InteractionReport:
    """Verify no MD's similarity atoms read an attribute some MD's conclusion writes.

    Blocking-MD conclusions only write block numbers, so a violation is a
    similarity atom over ``block(...)``.  Merge-MDs are triggered by the
    fixed duplicate relation, which no merge writes, so they cannot interact.
    """
    report = InteractionReport()
    written = {(md.relation, BLOCK_ATTR) for md in mds.mds}
    for md in mds.mds:
        for atom in md.atoms(SimAtom):
            for ref in (atom.left, atom.right):
                if ref.attr == BLOCK_ATTR:
                    report.violations.append(
                        f"{md.id}: {atom} compares block numbers, which blocking-MDs "
                        f"({', '.join(sorted(r for r, _ in written)) or 'none'}) modify"
                    )
    return report


def validate_mds(mds: MDSet, schema: Schema, specs: Mapping[str, SimSpec],
                 merge_functions: Mapping | None = None) -> MDSet:
    """Resolve names, check every structural rule, and return a validated copy."""
    if merge_functions is None:
        from .merge import MATCHING_FUNCTIONS

        merge_functions = MATCHING_FUNCTIONS
    ids = [md.id for md in mds.mds]
    if len(set(ids)) != len(ids):
        raise MDValidationError("duplicate MD ids")
    for md in mds.mds:
        _validate_md(md, schema, specs)
    for spec in mds.merges.values():
        _validate_merge(spec, schema, merge_functions)
    report = check_interaction_free(mds)
    if not report.ok:
        raise MDValidationError("; ".join(report.violations))
    return MDSet(mds.mds, dict(mds.merges), validated=True)
