"""Random small instances and interaction-free blocking rules."""
from __future__ import annotations

import random
from dataclasses import dataclass

from mdresolve.mdlang import parse_mds
from mdresolve.schema import Instance, load_schema, make_record
from mdresolve.similarity import parse_sim_specs

SCHEMA_TEXT = """\
relation A(aid: key, name: short-string, city: text, code: numeric)
relation B(bid: key, title: text, year: numeric)
relation L(lid: key, aid: numeric, bid: numeric)
foreign L.aid -> A.aid
foreign L.bid -> B.bid
"""

NAMES = ["martha", "marhta", "martin", "dwayne", "duane", "dixon", "dicksonx", "jones", "johnson", "joan"]
CITIES = ["new york", "new york city", "york", "ottawa", "ottawa ontario", "paris", "paris france", None]
WORDS = ["data", "cleaning", "entity", "resolution", "blocking", "rules", "graph", "query", "learning"]

# body templates; every MD keeps block atoms out of similarity atoms
TEMPLATES = [
    "block A x, A y when sim(x.name, y.name, nameSim)",
    "block A x, A y when sim(x.name, y.name, nameSim) and sim(x.city, y.city, citySim)",
    "block A x, A y when sim(x.code, y.code, codeSim)",
    "block A x, A y when x.code = y.code and sim(x.name, y.name, nameSim)",
    "block B x, B y when sim(x.title, y.title, titleSim)",
    "block B x, B y when sim(x.title, y.title, titleSim) and x.year = y.year",
    "block B x, B y when sim(x.year, y.year, yearSim)",
    "block B p1, B p2 when L(_, a1, p1) and L(_, a2, p2) and A(a1, _, _, _) and A(a2, _, _, _) "
    "and block(a1) = block(a2)",
    "block B p1, B p2 when sim(p1.title, p2.title, titleSim) and L(_, a1, p1) and L(_, a2, p2) "
    "and A(a1, _, _, _) and A(a2, _, _, _) and block(a1) = block(a2)",
    "block A a1, A a2 when sim(a1.name, a2.name, nameSim) and L(_, a1, p1) and L(_, a2, p2) "
    "and B(p1, _, _) and B(p2, _, _) and block(p1) = block(p2)",
    "block A a1, A a2 when L(_, a1, p) and L(_, a2, p)",
]


@dataclass
class Case:
    instance: Instance
    specs: dict
    mds: object
    rules: str
    dups: dict


def _typo(rng: random.Random, s: str) -> str:
    if len(s) < 3 or rng.random() < 0.5:
        return s
    i = rng.randrange(len(s) - 1)
    return s[:i] + s[i + 1] + s[i] + s[i + 2:]


def _heads(template: str) -> tuple[str, str]:
    first, second = template.split(" when ")[0][len("block "):].split(", ")
    return first.split()[1], second.split()[1]


def random_case(rng: random.Random, max_records: int = 50, max_mds: int = 4) -> Case:
    schema = load_schema(SCHEMA_TEXT)
    sims = "\n".join([
        f"sim A.name jaro-winkler {rng.choice([0.8, 0.85, 0.9])} as nameSim",
        f"sim A.city tfidf-cosine {rng.choice([0.3, 0.5])} as citySim",
        f"sim A.code numeric-edit {rng.choice([0.5, 0.75])} as codeSim",
        f"sim B.title tfidf-cosine {rng.choice([0.3, 0.5, 0.6])} as titleSim",
        f"sim B.year numeric-edit {rng.choice([0.5, 0.75])} as yearSim",
    ])
    specs = parse_sim_specs(sims, schema)
    n_a = rng.randint(2, 16)
    n_b = rng.randint(2, 16)
    n_l = rng.randint(0, min(18, max_records - n_a - n_b))
    rids = rng.sample(range(1, 400), n_a + n_b + n_l)
    a_ids, b_ids, l_ids = rids[:n_a], rids[n_a:n_a + n_b], rids[n_a + n_b:]
    rel = {"A": {}, "B": {}, "L": {}}
    for aid in a_ids:
        row = {"aid": aid, "name": _typo(rng, rng.choice(NAMES)), "city": rng.choice(CITIES),
               "code": rng.choice([None, 1998, 1989, 2007, 12, 21, 120])}
        rel["A"][aid] = make_record(schema.relation("A"), row)
    for bid in b_ids:
        words = rng.sample(WORDS, rng.randint(1, 4))
        row = {"bid": bid, "title": " ".join(words), "year": rng.choice([2001, 2010, 2011, 1999, None])}
        rel["B"][bid] = make_record(schema.relation("B"), row)
    for lid in l_ids:
        row = {"lid": lid, "aid": rng.choice(a_ids + [None]), "bid": rng.choice(b_ids)}
        rel["L"][lid] = make_record(schema.relation("L"), row)
    instance = Instance(schema, rel)
    chosen = rng.sample(TEMPLATES, rng.randint(1, max_mds))
    rules = "".join(f"{t}\n  then block({_heads(t)[0]}) = block({_heads(t)[1]});\n" for t in chosen)
    rules += "merge A using match(name)=longest, match(city)=union, match(code)=max;\n"
    rules += "merge B using match(title)=longest, match(year)=max;\n"
    mds = parse_mds(rules, schema, specs)
    dups = {}
    for r, ids in (("A", a_ids), ("B", b_ids)):
        pairs = set()
        for _ in range(rng.randint(0, len(ids))):
            a, b = rng.sample(ids, 2)
            pairs.add((min(a, b), max(a, b)))
        dups[r] = pairs
    return Case(instance, specs, mds, rules, dups)


def random_cases(n: int, seed: int) -> list[Case]:
    rng = random.Random(seed)
    return [random_case(rng) for _ in range(n)]
