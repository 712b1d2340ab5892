"""Chase of blocking-MDs to a fixpoint.

Block numbers combine with ``match_bl = max``, so the fixpoint assigns each
record the largest rid of its class in the least partition closed under all
MD applications.  A union-find with the larger rid as representative computes
exactly that partition.  MDs whose bodies compare block numbers are replayed
whenever a relation they read has gained a union since their last run.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from itertools import combinations
from typing import Mapping

from .errors import MDValidationError
from .mdlang import MDSet, SimAtom
from .plan import EvalContext, JoinPlan, compile_md
from .schema import Instance
from .similarity import SimCache
from .unionfind import MaxUnionFind


def match_bl(i: int, j: int) -> int:
    """Matching function for block numbers."""
    if i <= 0 or j <= 0:
        raise ValueError("block numbers are positive")
    return i if j <= i else j


@dataclass(frozen=True)
class LineageStep:
    step: int
    md_id: str
    rid1: int
    rid2: int
    old1: int
    old2: int
    new: int

    def tsv(self) -> str:
        return "\t".join(map(str, (self.step, self.md_id, self.rid1, self.rid2, self.old1, self.old2, self.new)))


@dataclass
class BlockAssignment:
    """Final block per record, with the log of MD steps that produced it.

    Two assignments are equal when their blocks are; the lineage records one
    particular application order and is not part of the result.
    """

    blocks: dict[str, dict[int, int]]
    lineage: list[LineageStep] = field(default_factory=list)

    def __eq__(self, other):
        if not isinstance(other, BlockAssignment):
            return NotImplemented
        return self.blocks == other.blocks

    def block(self, relation: str, rid: int) -> int:
        return self.blocks[relation][rid]

    def groups(self, relation: str) -> list[list[int]]:
        out: dict[int, list[int]] = {}
        for rid, bl in sorted(self.blocks.get(relation, {}).items()):
            out.setdefault(bl, []).append(rid)
        return [out[bl] for bl in sorted(out)]

    def dump_blocks(self) -> str:
        lines = []
        for rel in sorted(self.blocks):
            for rid, bl in sorted(self.blocks[rel].items()):
                lines.append(f"{rel}\t{rid}\t{bl}")
        return "".join(line + "\n" for line in lines)

    def dump_lineage(self) -> str:
        return "".join(step.tsv() + "\n" for step in self.lineage)


def initial_assignment(instance: Instance) -> BlockAssignment:
    return BlockAssignment({rel: {rid: rec.block for rid, rec in instance.relation(rel).items()} for rel in instance})


def enforce_blocking(instance: Instance, mds: MDSet, cache: SimCache, seed: int | None = None,
                     plans: list[JoinPlan] | None = None) -> BlockAssignment:
    """Apply every blocking-MD until none changes a block.

    ``seed`` shuffles the MD order in each round and the order in which
    matches are applied; the resulting blocks do not depend on it.
    """
    if not mds.validated:
        raise MDValidationError("the chase needs a validated MD set (see validate_mds)")
    for md in mds.mds:
        for atom in md.atoms(SimAtom):
            cache.spec(atom.spec)
    if plans is None:
        plans = [compile_md(md, instance.schema) for md in mds.mds]
    rng = random.Random(seed) if seed is not None else None
    ufs = {rel: MaxUnionFind(instance.rids(rel)) for rel in instance}
    for rel in instance:
        # records arriving with blocks already shared start in one class
        for rid, rec in instance.relation(rel).items():
            if rec.block != rid and rec.block in ufs[rel].parent:
                ufs[rel].union(rid, rec.block)
    version = {rel: 0 for rel in instance}
    seen: list[dict[str, int] | None] = [None] * len(plans)
    lineage: list[LineageStep] = []

    def block_of(rel: str, rid: int) -> int:
        return ufs[rel].find(rid)

    while True:
        order = list(range(len(plans)))
        if rng is not None:
            rng.shuffle(order)
        ran = False
        for k in order:
            plan = plans[k]
            reads = plan.reads_blocks
            snapshot = {rel: version[rel] for rel in reads}
            if seen[k] is not None and seen[k] == snapshot:
                continue
            ran = True
            seen[k] = snapshot
            pairs = sorted(plan.head_pairs(EvalContext(instance, cache, block_of)))
            if rng is not None:
                rng.shuffle(pairs)
            rel = plan.md.relation
            uf = ufs[rel]
            for r1, r2 in pairs:
                old1, old2 = uf.find(r1), uf.find(r2)
                if old1 == old2:
                    continue
                uf.union(r1, r2)
                version[rel] += 1
                lineage.append(LineageStep(len(lineage) + 1, plan.md.id, r1, r2, old1, old2, match_bl(old1, old2)))
        if not ran:
            break
    blocks = {rel: {rid: ufs[rel].find(rid) for rid in instance.rids(rel)} for rel in instance}
    return BlockAssignment(blocks, lineage)


CandidatePairs = Mapping[str, frozenset]


def candidate_pairs(assignment: BlockAssignment) -> dict[str, frozenset]:
    """Unordered within-block rid pairs per relation, as ``(smaller, larger)``."""
    out = {}
    for rel in sorted(assignment.blocks):
        pairs = set()
        for group in assignment.groups(rel):
            pairs.update(combinations(group, 2))
        out[rel] = frozenset(pairs)
    return out


def format_pairs(pairs: Mapping[str, frozenset]) -> str:
    lines = [f"{rel}\t{a}\t{b}" for rel in sorted(pairs) for a, b in sorted(pairs[rel])]
    return "".join(line + "\n" for line in lines)
