import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mdresolve.chase import enforce_blocking
from mdresolve.errors import MDSyntaxError, MDValidationError
from mdresolve.mdlang import (
    AttrRef,
    BLOCK_ATTR,
    BlockEq,
    BlockingMD,
    EqAtom,
    HeadAtom,
    MDSet,
    MergeSpec,
    RelAtom,
    SimAtom,
    Var,
    WILDCARD,
    check_interaction_free,
    format_mdset,
    parse_mds,
    parse_syntax,
    record_vars,
    validate_mds,
)
from mdresolve.pipeline import load_config
from mdresolve.schema import load_schema
from mdresolve.similarity import build_sim_cache, parse_sim_specs
from mdresolve.schema import load_instance


@pytest.fixture(scope="module")
def env(bibsample):
    cfg = load_config(bibsample / "pipeline.ini")
    text = cfg.schema.read_text()
    schema = load_schema(text)
    return schema, parse_sim_specs(text, schema), cfg.rules.read_text(), cfg


AUTHOR_RULE = ("block Author a1, Author a2 when sim(a1.name, a2.name, nameSim) and "
               "sim(a1.affiliation, a2.affiliation, affSim) then block(a1) = block(a2);")


def test_author_rule(env):
    schema, specs, _, _ = env
    mds = parse_mds(AUTHOR_RULE, schema, specs)
    assert len(mds) == 1 and mds.validated
    md = mds.mds[0]
    assert md.id == "md1" and md.relation == "Author"
    assert len(md.atoms(SimAtom)) == 2


def test_bundled_rules(env):
    schema, specs, rules, _ = env
    mds = parse_mds(rules, schema, specs)
    assert [md.relation for md in mds.mds] == ["Paper", "Author", "Paper", "Author"]
    collective = mds.mds[2]
    assert len(collective.atoms(RelAtom)) == 4
    assert len(collective.atoms(SimAtom)) == 1
    assert len(collective.atoms(BlockEq)) == 1
    assert mds.merges["Paper"].as_dict()["keyword"] == "union"
    assert check_interaction_free(mds).ok
    assert record_vars(collective, schema) == {"p1": "Paper", "p2": "Paper", "a1": "Author", "a2": "Author"}


def test_round_trip_of_bundled_rules(env):
    _, _, rules, _ = env
    once = parse_syntax(rules)
    assert parse_syntax(format_mdset(once)) == once


@pytest.mark.parametrize("text, message", [
    ("block Paper p1, Author a2 when sim(p1.title, p1.title, titleSim) then block(p1) = block(a2);", "differ"),
    ("block Author a, Author a when sim(a.name, a.name, nameSim) then block(a) = block(a);", "distinct"),
    ("block Author a1, Author a2 when sim(a1.name, a2.name, nameSim) then block(a1) = block(a3);", "conclusion"),
    ("block Author a1, Author a2 when sim(a1.name, a2.name, fooSim) then block(a1) = block(a2);", "unknown sim"),
    ("block Author a1, Author a2 when sim(a1.nick, a2.nick, nameSim) then block(a1) = block(a2);",
     "nick"),
    ("block Author a1, Author a2 when sim(a1.affiliation, a2.affiliation, nameSim) "
     "then block(a1) = block(a2);", "attribute of nameSim"),
    ("block Author a1, Author a2 when Paper(p, _, _, _, _, _) and block(a1) = block(p) "
     "then block(a1) = block(a2);", "different relations"),
    ("block Author a1, Author a2 when Paper(p, _, _) then block(a1) = block(a2);", "6 attributes"),
    ("block Author a1, Author a2 when Paper(p, _, _, _, _, _) then block(a1) = block(a2);", "never mentions"),
    ("block Author a1, Author a2 when Paper(a1, _, _, _, _, _) then block(a1) = block(a2);", "both"),
    ("block Author a1, Author a2 when Writer(a1) then block(a1) = block(a2);", "unknown relation"),
    ("block Author a1, Author a2 when q.name = a2.name then block(a1) = block(a2);", "not a record variable"),
    ("block Author a1, Author a2 when block(a1) = block(z) then block(a1) = block(a2);", "record variable"),
    ("merge Paper using match(pid)=max;", "key attribute"),
    ("merge Paper using match(title)=max;", "does not apply"),
    ("merge Paper using match(title)=shortest;", "unknown matching function"),
    ("merge Paper using match(title)=longest, match(title)=union;", "twice"),
    ("merge Paper using match(colour)=longest;", "unknown attribute"),
    ("merge Venue using match(title)=longest;", "unknown relation"),
])
def test_validation_errors(env, text, message):
    schema, specs, _, _ = env
    with pytest.raises(MDValidationError, match=message):
        parse_mds(text, schema, specs)


@pytest.mark.parametrize("text, line, column", [
    ("block Author a1, Author a2 when sim(block(a1), block(a2), nameSim) then block(a1) = block(a2);", 1, 37),
    ("block Author a1 Author a2", 1, 17),
    ("block Author a1, Author a2\n  when sim(a1.name a2.name, nameSim)", 2, 20),
    ("block Author a1, Author a2 when $ then", 1, 33),
    ("merge Paper using match(title)=longest;\nmerge Paper using match(year)=max;", 2, 1),
])
def test_syntax_errors_carry_position(text, line, column):
    with pytest.raises(MDSyntaxError) as info:
        parse_syntax(text)
    assert (info.value.line, info.value.column) == (line, column)


def test_comments_and_hyphenated_names():
    mds = parse_syntax("# comment\nblock A x, A y when sim(x.n, y.n, n-sim) # trailing\n then block(x) = block(y);\n")
    assert mds.mds[0].body[0].spec == "n-sim"


def test_sim_over_blocks_is_flagged():
    md = BlockingMD("m", (HeadAtom("Author", "a1"), HeadAtom("Author", "a2")),
                    (SimAtom(AttrRef("a1", BLOCK_ATTR), AttrRef("a2", BLOCK_ATTR), "nameSim"),), ("a1", "a2"))
    report = check_interaction_free(MDSet((md,)))
    assert not report.ok and "block numbers" in report.violations[0]


def test_empty_set_is_interaction_free():
    assert check_interaction_free(MDSet()).ok


def test_duplicate_ids_rejected(env):
    schema, specs, _, _ = env
    md = parse_syntax(AUTHOR_RULE).mds[0]
    with pytest.raises(MDValidationError, match="duplicate"):
        validate_mds(MDSet((md, md)), schema, specs)


def test_chase_refuses_unvalidated_sets(env, bibsample):
    schema, specs, rules, cfg = env
    inst = load_instance(schema, cfg.data)
    with pytest.raises(MDValidationError):
        enforce_blocking(inst, parse_syntax(rules), build_sim_cache(inst, specs))


def test_validation_does_not_change_equality(env):
    schema, specs, rules, _ = env
    assert parse_mds(rules, schema, specs) == parse_syntax(rules)


# -- printer round trip on generated syntax trees

IDENTS = st.sampled_from(["x", "y", "p1", "p2", "a-1", "rel_b", "z9"])
ATTRS = st.sampled_from(["name", "title", "year", "cid"])
RELS = st.sampled_from(["A", "Paper", "R2"])


@st.composite
def attr_refs(draw):
    return AttrRef(draw(IDENTS), draw(ATTRS))


@st.composite
def atoms(draw):
    kind = draw(st.integers(0, 3))
    if kind == 0:
        return SimAtom(draw(attr_refs()), draw(attr_refs()), draw(st.sampled_from(["s", "titleSim", "n-sim"])))
    if kind == 1:
        return EqAtom(draw(attr_refs()), draw(attr_refs()))
    if kind == 2:
        terms = draw(st.lists(st.one_of(st.just(WILDCARD), IDENTS.map(Var), attr_refs()), min_size=1, max_size=5))
        return RelAtom(draw(RELS), tuple(terms))
    return BlockEq(draw(IDENTS), draw(IDENTS))


@st.composite
def mdsets(draw):
    mds = []
    for i in range(draw(st.integers(0, 3))):
        rel = draw(RELS)
        v1, v2 = draw(IDENTS), draw(IDENTS)
        body = tuple(draw(st.lists(atoms(), min_size=1, max_size=4)))
        mds.append(BlockingMD(f"md{i + 1}", (HeadAtom(rel, v1), HeadAtom(draw(RELS), v2)), body, (v1, v2)))
    merges = {}
    for rel in draw(st.lists(RELS, unique=True, max_size=2)):
        fns = draw(st.lists(st.tuples(ATTRS, st.sampled_from(["longest", "max", "union"])), min_size=1, max_size=3))
        merges[rel] = MergeSpec(rel, tuple(fns))
    return MDSet(tuple(mds), merges)


@settings(max_examples=200)
@given(mdsets())
def test_print_parse_round_trip(mds):
    printed = format_mdset(mds)
    assert parse_syntax(printed) == mds
    assert format_mdset(parse_syntax(printed)) == printed
