"""Deterministic synthetic bibliographic corpus with a gold standard.

The generator plants cases that key-based blocking gets wrong:

* an author who changed affiliation appears twice with similar names but
  unrelated affiliations; the two records are linked only through
  duplicate papers;
* a paper appears twice with loosely similar titles, written by the same
  author record;
* distinct authors with near-identical names at one institution, and
  distinct papers with near-identical titles, which key blocking merges.

Everything is drawn from one ``random.Random(seed)``.
"""
from __future__ import annotations

import csv
import io
import random
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path

FIRST = [
    "Adele", "Bruno", "Chiara", "Dmitri", "Elena", "Farid", "Greta", "Hiro", "Ines", "Jonas",
    "Katya", "Lorenzo", "Mirela", "Nikhil", "Oksana", "Pablo", "Quentin", "Rosa", "Stefan", "Tamar",
    "Ulrich", "Vera", "Wojtek", "Ximena", "Yusuf", "Zofia", "Anders", "Beatriz", "Cyril", "Dalia",
]
LAST = [
    "Albrecht", "Bergstrom", "Castellano", "Drozdov", "Eriksen", "Fontaine", "Gallagher", "Haddad",
    "Ivanova", "Jablonski", "Kowalczyk", "Lindqvist", "Marchetti", "Nakamura", "Oyelaran", "Petrovic",
    "Quintero", "Rasmussen", "Schneider", "Takahashi", "Umarov", "Valdivia", "Wojcik", "Yamamoto",
    "Zielinski", "Abernathy", "Brannigan", "Cervantes", "Delacroix", "Esposito", "Fitzgerald", "Grimaldi",
    "Halvorsen", "Iglesias", "Jovanovic", "Kristiansen", "Lombardi", "Montgomery", "Novak", "Ostrowski",
]
AFFILIATIONS = [
    "University of Toronto", "German Aerospace Center", "Institute of Communications",
    "Ecole des Hautes Etudes", "Carleton University", "Recherche Scientifique Nationale",
    "Kyoto Research Park", "Polytechnic of Milan", "Technion Haifa", "Charles University Prague",
    "Max Planck Institute Saarbruecken", "Universidad de Chile", "Aalto School of Science",
    "Imperial College London", "Tsinghua Department of Computing", "Jagiellonian Krakow",
    "Norwegian Defence Laboratory", "Bocconi Milano", "Seoul National Campus", "Sorbonne Paris",
]
GENERIC = [
    "adaptive", "analysis", "approach", "networks", "model", "learning", "systems", "data",
    "distributed", "framework", "efficient", "query", "optimization", "evaluation", "design",
    "scalable", "graph", "streams", "inference", "protocols", "robust", "semantic", "mining",
    "retrieval", "secure", "parallel", "probabilistic", "compact", "incremental", "verified",
]
CONNECTORS = ["for", "of", "in", "with", "on"]
KEYWORDS = [
    "databases", "logic", "vision", "security", "theory", "networking", "biology", "robotics",
    "statistics", "languages", "hardware", "medicine",
]
CONFERENCES = [
    "Medical Anthropology", "First C2C-CC-COMeSafety Simulation", "Very Large Data Bases",
    "Principles of Database Systems", "Knowledge Discovery and Data Mining", "Logic in Computer Science",
    "Computer Vision and Pattern Recognition", "Symposium on Security and Privacy",
    "Foundations of Computer Science", "Intelligent Systems for Molecular Biology",
]
JOURNALS = [
    "Frank Cass", "IEEE Internet Computing", "Journal of Artificial Intelligence Research",
    "Transactions on Database Systems", "Data and Knowledge Engineering", "Machine Learning Journal",
]
SYLLABLES = ["ka", "lo", "mi", "ve", "tor", "sen", "dra", "qu", "bel", "nix", "zu", "rho", "fan", "gil", "mur"]

SCHEMA = """\
# Synthetic bibliographic corpus.
relation Author(aid: key, name: short-string, affiliation: text)
relation Paper(pid: key, title: text, year: numeric, cid: numeric, jid: numeric, keyword: text)
relation PaperAuthor(id: key, pid: numeric, aid: numeric, name: short-string, affiliation: text)
relation Conference(cid: key, sname: short-string, fname: text, hpage: short-string)
relation Journal(jid: key, sname: short-string, fname: text, hpage: short-string)

foreign PaperAuthor.pid -> Paper.pid
foreign PaperAuthor.aid -> Author.aid
foreign Paper.cid -> Conference.cid
foreign Paper.jid -> Journal.jid

sim Author.name jaro-winkler 0.9 as nameSim
sim Author.affiliation tfidf-cosine 0.6 as affSim
sim Paper.title tfidf-cosine 0.6 as titleSim
sim Paper.title tfidf-cosine 0.3 as titleLowSim
"""

RULES = """\
# Key rules: the same similarities standard blocking uses.
block Author a1, Author a2
  when sim(a1.name, a2.name, nameSim) and sim(a1.affiliation, a2.affiliation, affSim)
  then block(a1) = block(a2);

block Paper p1, Paper p2
  when sim(p1.title, p2.title, titleSim)
  then block(p1) = block(p2);

# Same venue and year with similar titles.
block Paper p1, Paper p2
  when sim(p1.title, p2.title, titleSim) and p1.year = p2.year and p1.cid = p2.cid
  then block(p1) = block(p2);

# Loosely similar titles by co-blocked authors.
block Paper p1, Paper p2
  when sim(p1.title, p2.title, titleLowSim)
   and PaperAuthor(_, p1, a1, _, _) and PaperAuthor(_, p2, a2, _, _)
   and Author(a1, _, _) and Author(a2, _, _) and block(a1) = block(a2)
  then block(p1) = block(p2);

# Similar names on co-blocked papers.
block Author a1, Author a2
  when sim(a1.name, a2.name, nameSim)
   and PaperAuthor(_, p1, a1, _, _) and PaperAuthor(_, p2, a2, _, _)
   and Paper(p1, _, _, _, _, _) and Paper(p2, _, _, _, _, _) and block(p1) = block(p2)
  then block(a1) = block(a2);

merge Author using match(name)=longest, match(affiliation)=union;
merge Paper using match(title)=longest, match(year)=max, match(cid)=max, match(jid)=max, match(keyword)=union;
"""

PIPELINE = """\
[pipeline]
schema = schema.txt
rules = rules.txt
seed = 7
blocking = both
lambda = 0.01
epochs = 200
split = 0.8

[data]
Author = author.csv
Paper = paper.csv
PaperAuthor = paperauthor.csv
Conference = conference.csv
Journal = journal.csv

[standard]
Author = nameSim, affSim
Paper = titleSim

[features.Author]
name = name
affiliation = affiliation ; zero

[features.Paper]
title = title
year = year ; zero
venue = cid->Conference.fname | jid->Journal.fname ; substitute
keyword = keyword ; zero

[training]
Author = train_author.tsv
Paper = train_paper.tsv

[gold]
file = gold.tsv
"""


@dataclass
class Corpus:
    tables: dict[str, list[list]] = field(default_factory=dict)
    gold: dict[str, set[tuple[int, int]]] = field(default_factory=dict)
    training: dict[str, list[tuple[int, int, int]]] = field(default_factory=dict)

    def size(self) -> int:
        return sum(len(rows) for rows in self.tables.values())


class _Generator:
    def __init__(self, seed: int):
        self.rng = random.Random(seed)
        self.terms: set[str] = set()
        self.names: set[str] = set()
        self.authors: list[list] = []
        self.papers: list[list] = []
        self.links: list[list] = []
        self.gold = {"Author": set(), "Paper": set()}
        self.hard_negatives = {"Author": set(), "Paper": set()}
        self.next_aid = 100
        self.next_pid = 1000

    # -- values

    def term(self) -> str:
        while True:
            word = "".join(self.rng.choice(SYLLABLES) for _ in range(3)).capitalize()
            if word not in self.terms:
                self.terms.add(word)
                return word

    def fresh_name(self, first: str | None = None) -> str:
        while True:
            name = f"{first or self.rng.choice(FIRST)} {self.rng.choice(LAST)}"
            if name not in self.names:
                self.names.add(name)
                return name

    def typo(self, name: str) -> str:
        first, last = name.split(" ", 1)
        i = self.rng.randrange(1, len(last) - 2)
        if self.rng.random() < 0.5:
            last = last[:i] + last[i + 1] + last[i] + last[i + 2:]
        else:
            last = last[:i] + last[i + 1:]
        return f"{first} {last}"

    def title_parts(self) -> list[str]:
        g = self.rng.sample(GENERIC, 2)
        return [g[0].capitalize(), self.term(), self.rng.choice(CONNECTORS), self.term(), g[1]]

    def keywords(self) -> list[str]:
        return self.rng.sample(KEYWORDS, self.rng.randint(1, 3))

    def venue(self) -> tuple[int | None, int | None]:
        if self.rng.random() < 0.7:
            return self.rng.randrange(1, len(CONFERENCES) + 1), None
        return None, 100 + self.rng.randrange(1, len(JOURNALS) + 1)

    # -- records

    def author(self, name: str, affiliation: str) -> int:
        self.next_aid += self.rng.randint(1, 9)
        self.authors.append([self.next_aid, name, affiliation])
        return self.next_aid

    def paper(self, title: str, year: int, venue, keywords: list[str]) -> int:
        self.next_pid += self.rng.randint(1, 9)
        cid, jid = venue
        self.papers.append([self.next_pid, title, year, cid, jid, ", ".join(sorted(keywords))])
        return self.next_pid

    def link(self, pid: int, aid: int) -> None:
        row = next(r for r in self.authors if r[0] == aid)
        self.links.append([len(self.links) + 1, pid, aid, row[1], row[2]])

    def dup(self, rel: str, rids: list[int]) -> None:
        for a, b in combinations(sorted(rids), 2):
            self.gold[rel].add((a, b))

    # -- entities

    def person(self, kind: str) -> list[int]:
        name = self.fresh_name()
        aff = self.rng.choice(AFFILIATIONS)
        first = self.author(name, aff)
        if kind == "single":
            return [first]
        if kind == "dup":
            second = self.author(self.typo(name) if self.rng.random() < 0.6 else name, aff)
        else:  # moved: similar name, unrelated affiliation
            other = self.rng.choice([a for a in AFFILIATIONS if a != aff])
            second = self.author(self.typo(name) if self.rng.random() < 0.5 else name, other)
        self.dup("Author", [first, second])
        return [first, second]

    def paper_entity(self, kind: str, authors_of: list[list[int]]) -> list[int]:
        """``authors_of[i]`` lists the author records linked to the i-th paper record."""
        parts = self.title_parts()
        year = self.rng.randint(1995, 2015)
        venue = self.venue()
        kw = self.keywords()
        first = self.paper(" ".join(parts), year, venue, kw)
        pids = [first]
        if kind == "strong":
            variant = parts[:4] if self.rng.random() < 0.5 else parts + [self.rng.choice(["revisited", "extended"])]
            pids.append(self.paper(" ".join(variant), year, venue, kw[:1]))
        elif kind == "loose":
            # keep one distinctive term, reword the rest
            fresh = [g for g in GENERIC if g not in (parts[0].lower(), parts[4])]
            g = self.rng.sample(fresh, 2)
            variant = [g[0].capitalize(), parts[1], self.rng.choice(CONNECTORS), g[1]]
            shifted = year + self.rng.choice([0, 1])
            pids.append(self.paper(" ".join(variant), shifted, venue, kw))
        elif kind == "hard":
            pids.append(self.paper(" ".join(self.title_parts()), year, venue, kw))
        if len(pids) > 1:
            self.dup("Paper", pids)
        for pid, aids in zip(pids, authors_of):
            for aid in aids:
                self.link(pid, aid)
        return pids


def generate(seed: int = 20240101, people: int = 88) -> Corpus:
    g = _Generator(seed)
    rng = g.rng
    kinds = ["single"] * (people // 2) + ["dup"] * (people // 5) + ["moved"] * (people - people // 2 - people // 5)
    rng.shuffle(kinds)
    persons = [(kind, g.person(kind)) for kind in kinds]

    # homonyms: a second person with a near-identical name at the same place
    for kind, recs in rng.sample([p for p in persons if p[0] == "single"], 5):
        row = next(r for r in g.authors if r[0] == recs[0])
        twin = g.author(g.typo(row[1]), row[2])
        g.hard_negatives["Author"].add((min(recs[0], twin), max(recs[0], twin)))
        persons.append(("homonym", [twin]))

    for kind, recs in persons:
        if kind == "moved":
            # the duplicate paper links the two author records
            g.paper_entity("strong", [[recs[0]], [recs[1]]])
        elif kind == "dup":
            g.paper_entity(rng.choice(["strong", "loose"]), [[recs[0]], [recs[1]]])
        else:
            pick = rng.random()
            kind_p = "loose" if pick < 0.25 else "hard" if pick < 0.35 else "single"
            g.paper_entity(kind_p, [[recs[0]], [recs[0]]])

    # singles sharing a title with another paper but not its authors
    singles = [p for p in persons if p[0] == "single"]
    for _ in range(6):
        (_, ra), (_, rb) = rng.sample(singles, 2)
        parts = g.title_parts()
        p1 = g.paper(" ".join(parts), rng.randint(1995, 2015), g.venue(), g.keywords())
        swapped = parts[:4] + [rng.choice([w for w in GENERIC if w != parts[4]])]
        p2 = g.paper(" ".join(swapped), rng.randint(1995, 2015), g.venue(), g.keywords())
        g.link(p1, ra[0])
        g.link(p2, rb[0])
        g.hard_negatives["Paper"].add((p1, p2))

    conferences = [[i + 1, "", name, ""] for i, name in enumerate(CONFERENCES)]
    journals = [[101 + i, "", name, ""] for i, name in enumerate(JOURNALS)]
    corpus = Corpus(
        tables={
            "Author": sorted(g.authors),
            "Paper": sorted(g.papers),
            "PaperAuthor": g.links,
            "Conference": conferences,
            "Journal": journals,
        },
        gold=g.gold,
    )
    for rel, rows in (("Author", g.authors), ("Paper", g.papers)):
        corpus.training[rel] = _training_pairs(rng, [r[0] for r in rows], g.gold[rel], g.hard_negatives[rel])
    return corpus


def _training_pairs(rng: random.Random, rids: list[int], gold: set, hard: set) -> list[tuple[int, int, int]]:
    positives = sorted(gold)
    positives = rng.sample(positives, max(2, int(0.6 * len(positives))))
    negatives = set(sorted(hard)[: len(hard) // 2 + 1])
    while len(negatives) < len(positives):
        a, b = sorted(rng.sample(rids, 2))
        if (a, b) not in gold:
            negatives.add((a, b))
    rows = [(a, b, 1) for a, b in positives] + [(a, b, 0) for a, b in sorted(negatives)]
    rows.sort()
    return rows


def _csv(rows: list[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for row in rows:
        writer.writerow(["" if v is None else v for v in row])
    return buf.getvalue()


def write_corpus(corpus: Corpus, out_dir: str | Path) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for rel, rows in corpus.tables.items():
        (out / f"{rel.lower()}.csv").write_text(_csv(rows), encoding="utf-8")
    gold = [f"{rel}\t{a}\t{b}" for rel in sorted(corpus.gold) for a, b in sorted(corpus.gold[rel])]
    (out / "gold.tsv").write_text("".join(line + "\n" for line in gold), encoding="utf-8")
    for rel, rows in corpus.training.items():
        text = "".join(f"{a}\t{b}\t{label}\n" for a, b, label in rows)
        (out / f"train_{rel.lower()}.tsv").write_text(text, encoding="utf-8")
    (out / "schema.txt").write_text(SCHEMA, encoding="utf-8")
    (out / "rules.txt").write_text(RULES, encoding="utf-8")
    (out / "pipeline.ini").write_text(PIPELINE, encoding="utf-8")


if __name__ == "__main__":  # pragma: no cover
    import sys

    write_corpus(generate(), sys.argv[1] if len(sys.argv) > 1 else "synthetic")
