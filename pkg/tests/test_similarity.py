import math
import os
import subprocess
import sys
from itertools import combinations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mdresolve import kernels
from mdresolve.errors import SimilarityError
from mdresolve.pipeline import load_config
from mdresolve.schema import ingest_text, load_instance, load_schema
from mdresolve.similarity import (
    SimCache,
    SimSpec,
    TfIdfCorpus,
    build_sim_cache,
    column_corpus,
    numeric_edit,
    parse_sim_specs,
    tfidf_cosine,
    tokenize,
    value_similarity,
)

from oracles import jaro_oracle, jaro_winkler_oracle, levenshtein_oracle, numeric_edit_oracle, tfidf_cosine_oracle

BACKENDS = sorted(kernels.backends())
small = st.text(alphabet="abcdeMARTH ", max_size=10)


@pytest.fixture(params=BACKENDS)
def k(request):
    return kernels.backends()[request.param]


@pytest.fixture(scope="module")
def mini(bibsample):
    cfg = load_config(bibsample / "pipeline.ini")
    schema = load_schema(cfg.schema.read_text())
    inst = load_instance(schema, cfg.data)
    return inst, parse_sim_specs(cfg.schema.read_text(), schema)


# -- kernels against frozen values

def test_martha(k):
    assert k.jaro("MARTHA", "MARHTA") == pytest.approx((1 + 1 + 5 / 6) / 3)
    assert k.jaro_winkler("MARTHA", "MARHTA") == pytest.approx(0.9611, abs=1e-4)


@pytest.mark.parametrize("a, b, expected", [
    ("DWAYNE", "DUANE", 0.84),
    ("DIXON", "DICKSONX", 0.8133),
    ("Matthias Roeckl", "Matthias Roeckl", 1.0),
    ("abc", "xyz", 0.0),
    ("", "abc", 0.0),
    ("", "", 0.0),
])
def test_jaro_winkler_examples(k, a, b, expected):
    assert k.jaro_winkler(a, b) == pytest.approx(expected, abs=1e-4)


@pytest.mark.parametrize("a, b, expected", [
    (1998, 1998, 1.0),
    (1998, 2007, 0.0),  # four substitutions
    (7, 7777, 0.25),
    (2010, 2011, 0.75),
    (1998, 1989, 0.5),
])
def test_numeric_edit_examples(a, b, expected):
    assert numeric_edit(a, b) == pytest.approx(expected)
    assert numeric_edit_oracle(a, b) == pytest.approx(expected)


def test_numeric_edit_null():
    with pytest.raises(SimilarityError):
        numeric_edit(None, 3)


# -- kernels against the independent oracles

@settings(max_examples=300)
@given(small, small)
def test_jaro_winkler_matches_oracle(a, b):
    for k in kernels.backends().values():
        assert k.jaro(a, b) == pytest.approx(jaro_oracle(a, b), abs=1e-12)
        assert k.jaro_winkler(a, b) == pytest.approx(jaro_winkler_oracle(a, b), abs=1e-12)


@settings(max_examples=300)
@given(st.text(alphabet="abc", max_size=9), st.text(alphabet="abc", max_size=9))
def test_levenshtein_matches_oracle(a, b):
    for k in kernels.backends().values():
        assert k.levenshtein(a, b) == levenshtein_oracle(a, b)


@settings(max_examples=300)
@given(st.integers(0, 10**7), st.integers(0, 10**7))
def test_numeric_edit_matches_oracle(x, y):
    assert numeric_edit(x, y) == pytest.approx(numeric_edit_oracle(x, y), abs=1e-12)


WORDS = st.sampled_from(["data", "graph", "entity", "rules", "africa", "west", "illness", "m3"])
DOCS = st.lists(WORDS, max_size=5).map(" ".join)


@settings(max_examples=200)
@given(st.lists(DOCS, min_size=2, max_size=8), st.data())
def test_tfidf_matches_oracle(docs, data):
    a, b = data.draw(st.sampled_from(docs)), data.draw(st.sampled_from(docs))
    assert tfidf_cosine(a, b, TfIdfCorpus(docs)) == pytest.approx(tfidf_cosine_oracle(a, b, docs), abs=1e-9)


# -- invariants

@settings(max_examples=200)
@given(small, small)
def test_symmetry_range_identity(a, b):
    for k in kernels.backends().values():
        w = k.jaro_winkler(a, b)
        assert w == k.jaro_winkler(b, a) and 0.0 <= w <= 1.0
        if a:
            assert k.jaro_winkler(a, a) == 1.0


@settings(max_examples=200)
@given(st.integers(0, 10**6), st.integers(0, 10**6))
def test_numeric_edit_symmetry_range(x, y):
    w = numeric_edit(x, y)
    assert w == numeric_edit(y, x) and 0.0 <= w <= 1.0
    assert numeric_edit(x, x) == 1.0


@settings(max_examples=100)
@given(st.lists(st.text(alphabet="abcdef", min_size=1, max_size=7), min_size=2, max_size=12, unique=True),
       st.floats(0.5, 1.0))
def test_backends_agree_on_pair_enumeration(values, threshold):
    found = {name: k.jw_pairs(values, threshold, False) for name, k in kernels.backends().items()}
    assert len({repr(v) for v in found.values()}) == 1
    for k in kernels.backends().values():
        assert k.jw_pairs(values, threshold, True) == found["python"]
    digits = [str(abs(hash(v)) % 10**4) for v in values]
    edits = {name: k.edit_pairs(sorted(set(digits)), threshold, False) for name, k in kernels.backends().items()}
    assert len({repr(v) for v in edits.values()}) == 1


# -- tf-idf over the mini-corpus

def test_tfidf_title_pairs(mini):
    inst, _ = mini
    corpus = column_corpus(inst, "Paper", "title")
    titles = inst.column("Paper", "title")
    illness = tfidf_cosine("Illness entities in West Africa", "Illness entities in Africa", corpus)
    assert illness == pytest.approx(1 / math.sqrt(2))
    assert illness == pytest.approx(tfidf_cosine_oracle(
        "Illness entities in West Africa", "Illness entities in Africa", titles))
    dlr = tfidf_cosine("DLR Simulation Environment m3", "DLR Simulation Environment", corpus)
    assert dlr == pytest.approx(math.sqrt(3 / 7))
    assert tfidf_cosine("Illness entities in Africa", "DLR Simulation Environment", corpus) == 0.0


def test_tfidf_trivial_cases():
    corpus = TfIdfCorpus(["German Aerospace Center", "Ecole des Hautes", "Institute of Communications"])
    assert tfidf_cosine("German Aerospace Center", "German Aerospace Center", corpus) == 1.0
    assert tfidf_cosine("Ecole des Hautes", "Institute of Communications", corpus) == 0.0
    assert tfidf_cosine("", "Ecole", corpus) == 0.0
    assert tokenize("West-Africa, Illness_x") == ["west", "africa", "illness", "x"]


# -- cache

def _brute_force(inst, spec):
    values = sorted({v for v in inst.column(spec.relation, spec.attribute) if v is not None})
    out = set()
    for a, b in combinations(values, 2):
        if spec.kernel == "jaro-winkler":
            w = jaro_winkler_oracle(a, b)
        elif spec.kernel == "numeric-edit":
            w = numeric_edit_oracle(a, b)
        else:
            w = tfidf_cosine_oracle(a, b, inst.column(spec.relation, spec.attribute))
        if w >= spec.threshold:
            out.add((a, b))
    return out


@pytest.mark.parametrize("threshold", [0.0, 0.3, 0.6, 0.7, 0.8, 1.0, 1.01])
def test_cache_completeness_on_titles(mini, threshold):
    inst, _ = mini
    spec = SimSpec("t", "Paper", "title", "tfidf-cosine", threshold)
    cache = build_sim_cache(inst, [spec])
    assert set(cache.weights["t"]) == _brute_force(inst, spec)
    if threshold > 1.0:
        assert len(cache) == 0


def test_cache_title_pairs(mini):
    inst, specs = mini
    cache = build_sim_cache(inst, specs)
    assert set(cache.weights["titleSim"]) == {
        ("DLR Simulation Environment", "DLR Simulation Environment m3"),
        ("Illness entities in Africa", "Illness entities in West Africa"),
    }
    strict = build_sim_cache(inst, [SimSpec("t", "Paper", "title", "tfidf-cosine", 0.7)])
    assert set(strict.weights["t"]) == {("Illness entities in Africa", "Illness entities in West Africa")}


def test_cache_on_synthetic_corpus_matches_brute_force(synthetic):
    cfg = load_config(synthetic / "pipeline.ini")
    schema = load_schema(cfg.schema.read_text())
    inst = load_instance(schema, {"Author": cfg.data["Author"]})
    specs = {n: s for n, s in parse_sim_specs(cfg.schema.read_text(), schema).items() if s.relation == "Author"}
    for flag in (False, True):
        cache = build_sim_cache(inst, specs, length_filter=flag)
        for name, spec in specs.items():
            if spec.kernel == "jaro-winkler":
                assert set(cache.weights[name]) == _brute_force(inst, spec)


def test_single_row_column_gives_empty_cache():
    schema = load_schema("relation A(aid: key, name: short-string)\n")
    inst = ingest_text("1,abc\n", "A", schema)
    assert len(build_sim_cache(inst, [SimSpec("n", "A", "name", "jaro-winkler", 0.1)])) == 0


def test_cache_reflexive_and_nulls():
    spec = SimSpec("n", "A", "name", "jaro-winkler", 0.9)
    cache = SimCache.from_weights({"n": spec}, {"n": {("b", "a"): 0.95, ("a", "c"): 0.5}})
    assert cache.similar("n", "a", "b") and cache.similar("n", "b", "a")
    assert not cache.similar("n", "a", "c")
    assert cache.similar("n", "zzz", "zzz")
    assert not cache.similar("n", None, None)
    assert cache.weight("n", "q", "q") == 1.0 and cache.weight("n", "a", "c") is None
    assert cache.neighbors("n", "a") == ["b", "a"]


def test_value_similarity_dispatch():
    assert value_similarity("numeric-edit", 12, 12) == 1.0
    with pytest.raises(SimilarityError):
        value_similarity("tfidf-cosine", "a", "b")
    with pytest.raises(SimilarityError):
        value_similarity("jaro-winkler", None, "b")


@pytest.mark.parametrize("line, message", [
    ("sim Author.name tfidf-cosine 0.5", "requires jaro-winkler"),
    ("sim Author.name jaro-winkler 1.5", "outside"),
    ("sim Author.name jaro-winkler high", "not a number"),
    ("sim Author.nick jaro-winkler 0.5", "unknown attribute"),
    ("sim Writer.name jaro-winkler 0.5", "unknown relation"),
    ("sim Author.name soundex 0.5", "unknown kernel"),
    ("sim Author.name", "malformed"),
    ("sim Author.name jaro-winkler 0.5\nsim Author.name jaro-winkler 0.6", "duplicate"),
])
def test_sim_spec_errors(line, message):
    schema = load_schema("relation Author(aid: key, name: short-string, affiliation: text)\n")
    with pytest.raises(SimilarityError, match=message):
        parse_sim_specs(line, schema)


def test_sim_spec_names():
    schema = load_schema("relation Author(aid: key, name: short-string, affiliation: text)\n")
    specs = parse_sim_specs("sim Author.name jaro-winkler 0.8\nsim Author.affiliation tfidf-cosine 0.7 as affSim\n",
                            schema)
    assert sorted(specs) == ["affSim", "nameSim"]


def test_pure_python_switch():
    env = dict(os.environ, MDRESOLVE_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from mdresolve import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
