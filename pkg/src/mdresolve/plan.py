"""Join plans for blocking-MD bodies.

:func:`compile_md` orders the body atoms greedily so every step is either a
filter over bound variables or an expansion driven by an index (record key,
attribute value, similarity neighbours, current block).  Full scans are used
only when nothing cheaper applies.  Evaluation yields variable bindings;
a record variable is bound to a :class:`~mdresolve.schema.Record`, any other
variable to a plain value.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Callable, Iterator

from .mdlang import (
    AttrRef,
    BLOCK_ATTR,
    BlockEq,
    BlockingMD,
    EqAtom,
    RelAtom,
    SimAtom,
    Var,
    Wildcard,
    record_vars,
)
from .schema import Instance, Record, Schema
from .similarity import SimCache

BlockOf = Callable[[str, int], int]

# greedy cost classes, cheapest first
FILTER, LOOKUP, INDEX, SIM_EXPAND, HASH_JOIN, SCAN = range(6)


@dataclass(frozen=True)
class Distinct:
    """Self-join guard: the two head variables bind different records."""

    left: str
    right: str

    def __str__(self) -> str:
        return f"{self.left} != {self.right}"


class EvalContext:
    """Data an evaluation reads: records, similarity cache and current blocks."""

    def __init__(self, instance: Instance, cache: SimCache, block_of: BlockOf | None = None):
        self.instance = instance
        self.cache = cache
        self.block_of = block_of or (lambda relation, rid: instance.relation(relation)[rid].block)
        self._block_index: dict[str, dict[int, list[int]]] = {}

    def value_index(self, relation: str, attribute: str) -> dict:
        key = ("value-index", relation, attribute)
        index = self.instance.memo.get(key)
        if index is None:
            index = {}
            for rid, rec in self.instance.relation(relation).items():
                v = rec.values[attribute]
                if v is not None:
                    index.setdefault(v, []).append(rid)
            self.instance.memo[key] = index
        return index

    def block_index(self, relation: str) -> dict[int, list[int]]:
        index = self._block_index.get(relation)
        if index is None:
            index = {}
            for rid in self.instance.relation(relation):
                index.setdefault(self.block_of(relation, rid), []).append(rid)
            self._block_index[relation] = index
        return index


@dataclass(frozen=True)
class Step:
    op: str
    atom: object
    binds: tuple[str, ...] = ()
    target: str | None = None  # variable an expansion binds
    position: int | None = None  # relation atoms: attribute position used for the lookup

    def describe(self) -> str:
        tail = f" -> {', '.join(self.binds)}" if self.binds else ""
        where = f" on #{self.position}" if self.position is not None else ""
        return f"{self.op}{where} {self.atom}{tail}"


class JoinPlan:
    def __init__(self, md: BlockingMD, steps: list[Step], rvars: dict[str, str], unify_order: dict):
        self.md = md
        self.steps = tuple(steps)
        self.rvars = rvars
        self._unify_order = unify_order

    @property
    def reads_blocks(self) -> frozenset[str]:
        """Relations whose block numbers the body inspects."""
        return frozenset(self.rvars[a.left] for a in self.md.atoms(BlockEq))

    def describe(self) -> str:
        return "\n".join(f"{i + 1}. {s.describe()}" for i, s in enumerate(self.steps))

    # -- evaluation

    def matches(self, ctx: EvalContext) -> Iterator[dict]:
        yield from self._run(0, {}, ctx)

    def head_pairs(self, ctx: EvalContext) -> set[tuple[int, int]]:
        v1, v2 = self.md.head_vars
        out = set()
        for env in self.matches(ctx):
            a, b = env[v1].rid, env[v2].rid
            out.add((a, b) if a < b else (b, a))
        return out

    def _run(self, k: int, env: dict, ctx: EvalContext) -> Iterator[dict]:
        if k == len(self.steps):
            yield env
            return
        for out in self._apply(self.steps[k], env, ctx):
            yield from self._run(k + 1, out, ctx)

    def _value(self, term, env: dict, ctx: EvalContext):
        if isinstance(term, Var):
            x = env[term.name]
            return x.rid if term.name in self.rvars else x
        rec = env[term.var]
        if term.attr == BLOCK_ATTR:
            return ctx.block_of(self.rvars[term.var], rec.rid)
        return rec.values[term.attr]

    def _records(self, relation: str, rids, ctx: EvalContext) -> Iterator[Record]:
        table = ctx.instance.relation(relation)
        for rid in rids:
            rec = table.get(rid)
            if rec is not None:
                yield rec

    def _apply(self, step: Step, env: dict, ctx: EvalContext) -> Iterator[dict]:
        op, atom = step.op, step.atom
        if op == "scan":
            for rec in ctx.instance.relation(self.rvars[atom]).values():
                yield {**env, atom: rec}
        elif op == "filter":
            if self._check(atom, env, ctx):
                yield env
        elif op in ("lookup", "index", "scan-relation"):
            yield from self._relation(step, env, ctx)
        elif op == "sim-expand":
            bound = atom.left if step.target == atom.right.var else atom.right
            a = self._value(bound, env, ctx)
            if a is None:
                return
            dest = atom.right if bound is atom.left else atom.left
            rel = self.rvars[dest.var]
            index = ctx.value_index(rel, dest.attr)
            for b in ctx.cache.neighbors(atom.spec, a):
                for rec in self._records(rel, index.get(b, ()), ctx):
                    yield {**env, dest.var: rec}
        elif op == "hash-join":
            bound, dest = (atom.left, atom.right) if step.target == atom.right.var else (atom.right, atom.left)
            a = self._value(bound, env, ctx)
            if a is None:
                return
            rel = self.rvars[dest.var]
            for rec in self._records(rel, ctx.value_index(rel, dest.attr).get(a, ()), ctx):
                yield {**env, dest.var: rec}
        elif op == "block-expand":
            src = atom.left if step.target == atom.right else atom.right
            rel = self.rvars[step.target]
            block = ctx.block_of(rel, env[src].rid)
            for rec in self._records(rel, ctx.block_index(rel).get(block, ()), ctx):
                yield {**env, step.target: rec}
        else:  # pragma: no cover
            raise AssertionError(op)

    def _check(self, atom, env: dict, ctx: EvalContext) -> bool:
        if isinstance(atom, Distinct):
            return env[atom.left].rid != env[atom.right].rid
        if isinstance(atom, SimAtom):
            return ctx.cache.similar(atom.spec, self._value(atom.left, env, ctx), self._value(atom.right, env, ctx))
        if isinstance(atom, EqAtom):
            a = self._value(atom.left, env, ctx)
            return a is not None and a == self._value(atom.right, env, ctx)
        if isinstance(atom, BlockEq):
            rel = self.rvars[atom.left]
            return ctx.block_of(rel, env[atom.left].rid) == ctx.block_of(rel, env[atom.right].rid)
        raise AssertionError(atom)  # pragma: no cover

    def _relation(self, step: Step, env: dict, ctx: EvalContext) -> Iterator[dict]:
        atom: RelAtom = step.atom
        decl = ctx.instance.schema.relation(atom.relation)
        table = ctx.instance.relation(atom.relation)
        if step.op == "scan-relation":
            candidates = table.values()
        else:
            probe = self._value(atom.terms[step.position], env, ctx)
            if probe is None:
                return
            if step.position == decl.key_position:
                rec = table.get(probe)
                candidates = () if rec is None else (rec,)
            else:
                attr = decl.attributes[step.position]
                candidates = self._records(atom.relation, ctx.value_index(atom.relation, attr).get(probe, ()), ctx)
        order = self._unify_order[atom]
        for rec in candidates:
            out = self._unify(order, rec, env, ctx)
            if out is not None:
                yield out

    def _unify(self, order, rec: Record, env: dict, ctx: EvalContext) -> dict | None:
        out = dict(env)
        for kind, attr, term in order:
            v = rec.values[attr]
            if kind == "self":
                prev = out.get(term.name)
                if prev is None:
                    out[term.name] = rec
                elif prev.rid != rec.rid:
                    return None
            elif kind == "record":
                if v is None:
                    return None
                prev = out.get(term.name)
                if prev is None:
                    target = ctx.instance.relation(self.rvars[term.name]).get(v)
                    if target is None:
                        return None
                    out[term.name] = target
                elif prev.rid != v:
                    return None
            elif kind == "value":
                if v is None:
                    return None
                if term.name in out:
                    if out[term.name] != v:
                        return None
                else:
                    out[term.name] = v
            else:  # attribute reference
                if v is None or v != self._value(term, out, ctx):
                    return None
        return out


def _unify_order(atom: RelAtom, schema: Schema, rvars: dict[str, str], singletons: set[str]):
    """Term handling order inside one relation atom: own key, record refs, value vars, attribute refs."""
    decl = schema.relation(atom.relation)
    ranked = []
    for pos, term in enumerate(atom.terms):
        attr = decl.attributes[pos]
        if isinstance(term, Wildcard):
            continue
        if isinstance(term, Var):
            if pos == decl.key_position and term.name in rvars:
                ranked.append((0, pos, ("self", attr, term)))
            elif term.name in rvars:
                ranked.append((1, pos, ("record", attr, term)))
            elif term.name not in singletons:
                ranked.append((2, pos, ("value", attr, term)))
        else:
            ranked.append((3, pos, ("attr", attr, term)))
    return tuple(item for _, _, item in sorted(ranked, key=lambda t: (t[0], t[1])))


def _term_vars(atom) -> list[str]:
    if isinstance(atom, (SimAtom, EqAtom)):
        return [atom.left.var, atom.right.var]
    if isinstance(atom, (BlockEq, Distinct)):
        return [atom.left, atom.right]
    raise AssertionError(atom)  # pragma: no cover


def _classify_relation(atom: RelAtom, schema: Schema, bound: set[str], rvars, singletons):
    decl = schema.relation(atom.relation)
    own = set()
    for pos, term in enumerate(atom.terms):
        if isinstance(term, Var) and (term.name in rvars or term.name not in singletons):
            own.add(term.name)
    for term in atom.terms:
        if isinstance(term, AttrRef) and term.var not in bound and term.var not in own:
            return None
    newly = tuple(sorted(v for v in own if v not in bound))

    def computable(term) -> bool:
        if isinstance(term, Var):
            return term.name in bound
        if isinstance(term, AttrRef):
            return term.var in bound
        return False

    key_term = atom.terms[decl.key_position]
    if computable(key_term):
        return LOOKUP, Step("lookup", atom, newly, position=decl.key_position)
    for pos, term in enumerate(atom.terms):
        if computable(term):
            return INDEX, Step("index", atom, newly, position=pos)
    return SCAN, Step("scan-relation", atom, newly)


def _classify(atom, schema: Schema, bound: set[str], rvars, singletons):
    if isinstance(atom, RelAtom):
        return _classify_relation(atom, schema, bound, rvars, singletons)
    left, right = _term_vars(atom)
    lb, rb = left in bound, right in bound
    if lb and rb:
        return FILTER, Step("filter", atom)
    if not (lb or rb):
        return None
    target = right if lb else left
    if isinstance(atom, SimAtom):
        return SIM_EXPAND, Step("sim-expand", atom, (target,), target=target)
    if isinstance(atom, EqAtom):
        return HASH_JOIN, Step("hash-join", atom, (target,), target=target)
    if isinstance(atom, BlockEq):
        return INDEX, Step("block-expand", atom, (target,), target=target)
    return None  # Distinct waits for both sides


def compile_md(md: BlockingMD, schema: Schema) -> JoinPlan:
    """Greedy join ordering; ties go to the atom written first."""
    rvars = record_vars(md, schema)
    counts: Counter[str] = Counter()
    for atom in md.atoms(RelAtom):
        for term in atom.terms:
            if isinstance(term, Var) and term.name not in rvars:
                counts[term.name] += 1
    singletons = {v for v, n in counts.items() if n == 1}
    unify = {a: _unify_order(a, schema, rvars, singletons) for a in md.atoms(RelAtom)}

    h1, h2 = md.head_vars
    remaining: list = list(md.body) + [Distinct(h1, h2)]
    bound: set[str] = set()
    steps: list[Step] = []
    while remaining:
        best = None
        for idx, atom in enumerate(remaining):
            found = _classify(atom, schema, bound, rvars, singletons)
            if found is not None and (best is None or found[0] < best[0]):
                best = (found[0], idx, found[1])
        if best is None or best[0] == SCAN:
            unbound_heads = [v for v in (h1, h2) if v not in bound]
            if unbound_heads:
                steps.append(Step("scan", unbound_heads[0], (unbound_heads[0],)))
                bound.add(unbound_heads[0])
                continue
            if best is None:
                free = sorted(v for v in rvars if v not in bound)
                steps.append(Step("scan", free[0], (free[0],)))
                bound.add(free[0])
                continue
        _, idx, step = best
        steps.append(step)
        bound.update(step.binds)
        remaining.pop(idx)
    for v in (h1, h2):
        if v not in bound:  # pragma: no cover - Distinct forces both heads
            steps.append(Step("scan", v, (v,)))
    return JoinPlan(md, steps, rvars, unify)
