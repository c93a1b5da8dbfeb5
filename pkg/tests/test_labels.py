import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from msos.labels import (
    RO, RW, WO, CompositionError, Label, LabelSignature, MentionedLabel, Objects, OpaqueLabel,
    SignatureMismatch, assemble, compose, composable, entity, identity_label, is_unobservable,
    label_from_json, label_to_json, mentioned_label, project_mentioned, project_unmentioned,
)
from msos.values import Env, Symbol, value_key

from conftest import OUT_E, RHO_E, SIGMA_E
from oracles import dict_compose, dict_unobservable

E0 = Env()
X1, X2, X3 = Env({"x": 1}), Env({"x": 2}), Env({"x": 3})


def lab(sig, **arrows):
    return Label(sig, tuple(arrows[n] for n in sig.names))


@pytest.fixture
def rs():
    return LabelSignature([RHO_E, SIGMA_E])


# --- identity ---------------------------------------------------------------

def test_identity_ro_rw(rs):
    idl = identity_label(rs, {"ρ": {}, "σ": {}})
    assert idl.arrows == (RO(E0), RW(E0, E0))


def test_identity_wo_only():
    sig = LabelSignature([OUT_E])
    assert identity_label(sig, {}).arrows == (WO(),)
    assert identity_label(sig, {}).arrows[0].emitted == ()


def test_identity_ro_carries_object():
    sig = LabelSignature([RHO_E])
    assert label_to_json(identity_label(sig, {"ρ": {"x": 1}})) == {"ρ": {"x": 1}}


def test_identity_missing_object_is_mismatch(rs):
    with pytest.raises(SignatureMismatch):
        identity_label(rs, {"ρ": {}})
    with pytest.raises(SignatureMismatch):
        identity_label(rs, {"ρ": 3, "σ": {}})
    with pytest.raises(SignatureMismatch):
        identity_label(rs, {"ρ": {}, "σ": {}, "τ": {}})


# --- compose ----------------------------------------------------------------

def test_compose_rw_preorder():
    sig = LabelSignature([SIGMA_E])
    got = compose(lab(sig, σ=RW(X1, X2)), lab(sig, σ=RW(X2, X3)))
    assert got.arrows == (RW(X1, X3),)


def test_compose_wo_concat():
    sig = LabelSignature([OUT_E])
    a, b = Symbol("a"), Symbol("b")
    got = compose(lab(sig, out=WO([a])), lab(sig, out=WO([b])))
    assert got.arrows[0].emitted == (a, b)


def test_compose_rw_mismatch_names_entity():
    sig = LabelSignature([SIGMA_E])
    with pytest.raises(CompositionError) as info:
        compose(lab(sig, σ=RW(E0, X1)), lab(sig, σ=RW(X2, E0)))
    assert info.value.entity == "σ"


def test_compose_reports_first_offending_entity(rs):
    a = lab(rs, ρ=RO(X1), σ=RW(E0, X1))
    b = lab(rs, ρ=RO(X2), σ=RW(X2, E0))
    with pytest.raises(CompositionError) as info:
        compose(a, b)
    assert info.value.entity == "ρ"
    assert not composable(a, b)


def test_compose_different_signatures(rs):
    other = LabelSignature([SIGMA_E])
    with pytest.raises(SignatureMismatch):
        compose(identity_label(rs, {"ρ": {}, "σ": {}}), identity_label(other, {"σ": {}}))


def test_true_and_one_are_different_values():
    sig = LabelSignature([SIGMA_E])
    a = lab(sig, σ=RW(E0, Env({"x": True})))
    b = lab(sig, σ=RW(Env({"x": 1}), E0))
    assert not composable(a, b)
    assert WO([True]) != WO([1])


# --- unobservability --------------------------------------------------------

def test_unobservable_identity(sig3):
    assert is_unobservable(identity_label(sig3, {"ρ": {}, "σ": {}}))


def test_emission_is_observable():
    sig = LabelSignature([OUT_E])
    assert not is_unobservable(lab(sig, out=WO([1])))


def test_unobservable_matches_definition_over_kinds(sig3):
    kinds = {"ρ": "ro", "σ": "rw", "out": "wo"}
    for post, emitted in itertools.product((X1, X2), ((), (1,))):
        label = lab(sig3, ρ=RO(E0), σ=RW(X1, post), out=WO(emitted))
        as_dict = {"ρ": E0, "σ": (X1, post), "out": emitted}
        assert is_unobservable(label) == dict_unobservable(kinds, as_dict)
    assert is_unobservable(lab(sig3, ρ=RO(E0), σ=RW(X1, X1), out=WO()))


# --- projections ------------------------------------------------------------

def test_project_mentioned_subset(rs):
    label = lab(rs, ρ=RO(X1), σ=RW(E0, E0))
    pm = project_mentioned(label, {"ρ"})
    assert pm.names == ("ρ",) and pm.arrows == (RO(X1),)


def test_project_mentioned_empty_is_empty_tuple(rs):
    pm = project_mentioned(identity_label(rs, {"ρ": {}, "σ": {}}), set())
    assert pm.arrows == () and len(pm) == 0


def test_project_mentioned_all(rs):
    label = lab(rs, ρ=RO(X1), σ=RW(E0, X2))
    assert project_mentioned(label, {"ρ", "σ"}).arrows == label.arrows


def test_project_unknown_entity(rs):
    with pytest.raises(SignatureMismatch):
        project_mentioned(identity_label(rs, {"ρ": {}, "σ": {}}), {"τ"})
    with pytest.raises(SignatureMismatch):
        project_unmentioned(identity_label(rs, {"ρ": {}, "σ": {}}), {"τ"})


def test_project_unmentioned_all_is_empty(rs):
    u = project_unmentioned(identity_label(rs, {"ρ": {}, "σ": {}}), {"ρ", "σ"})
    assert u == OpaqueLabel((), ())


def test_opaque_identity_projections_equal(sig3):
    objs = {"ρ": {"x": 1}, "σ": {}}
    for m in ({"ρ"}, {"σ"}, set(), {"out"}):
        a = project_unmentioned(identity_label(sig3, objs), m)
        b = project_unmentioned(identity_label(sig3, Objects.of(sig3, objs)), m)
        assert a == b
        assert is_unobservable(a)


def test_opaque_part_with_emission_is_observable():
    sig = LabelSignature([RHO_E, OUT_E])
    u = project_unmentioned(lab(sig, ρ=RO(E0), out=WO([Symbol("v")])), {"ρ"})
    assert not is_unobservable(u)


def test_assemble_round_trip(rs):
    label = lab(rs, ρ=RO(X1), σ=RW(E0, X2))
    m = {"σ"}
    assert assemble(project_mentioned(label, m), project_unmentioned(label, m), rs) == label


def test_assemble_empty_mentioned_gives_identity(rs):
    idl = identity_label(rs, {"ρ": {}, "σ": {}})
    assert assemble(MentionedLabel((), ()), project_unmentioned(idl, set()), rs) == idl


def test_assemble_tiling_mismatch(rs):
    label = lab(rs, ρ=RO(X1), σ=RW(E0, X2))
    with pytest.raises(SignatureMismatch):
        assemble(project_mentioned(label, {"ρ"}), project_unmentioned(label, {"ρ", "σ"}), rs)
    with pytest.raises(SignatureMismatch):
        assemble(project_mentioned(label, {"ρ"}), project_unmentioned(label, {"σ"}), rs)


def test_mentioned_label_kind_check(rs):
    with pytest.raises(SignatureMismatch):
        mentioned_label(rs, {"ρ": RW(E0, E0)})
    assert mentioned_label(rs, {"σ": RW(E0, X1)}).names == ("σ",)


def test_label_kind_check(rs):
    with pytest.raises(SignatureMismatch):
        Label(rs, (RW(E0, E0), RW(E0, E0)))
    with pytest.raises(SignatureMismatch):
        Label(rs, (RO(E0),))


def test_signature_rejects_duplicates_and_bad_domains():
    with pytest.raises(SignatureMismatch):
        LabelSignature([RHO_E, RHO_E])
    with pytest.raises(SignatureMismatch):
        entity("out", "write_only", "env")
    with pytest.raises(SignatureMismatch):
        entity("q", "read_mostly")


def test_json_round_trip(sig3):
    label = lab(sig3, ρ=RO(X1), σ=RW(E0, Env({"y": True})), out=WO([1, Symbol("breaking")]))
    js = label_to_json(label)
    assert list(js) == ["ρ", "σ", "out"]
    assert js == {"ρ": {"x": 1}, "σ": {"pre": {}, "post": {"y": True}}, "out": [1, "breaking"]}
    assert label_from_json(sig3, js) == label


def test_objects_are_interned_across_equal_signatures():
    a = LabelSignature([RHO_E, SIGMA_E])
    b = LabelSignature([RHO_E, SIGMA_E])
    assert Objects.of(a, {"ρ": {}, "σ": {}}) is Objects.of(b, {"ρ": {}, "σ": {}})


# --- property tests against the dict oracle ---------------------------------

envs = st.dictionaries(st.sampled_from("xyz"), st.one_of(st.integers(0, 2), st.booleans()), max_size=3)
emits = st.lists(st.one_of(st.integers(0, 2), st.booleans()), max_size=3)
KINDS = {"ρ": "ro", "σ": "rw", "out": "wo"}


def _to_label(sig, d):
    return Label(sig, (RO(Env(d["ρ"])), RW(Env(d["σ"][0]), Env(d["σ"][1])), WO(d["out"])))


def _norm(d):
    # values compared kind-aware, so True and 1 stay apart
    return {"ρ": Env(d["ρ"]), "σ": (Env(d["σ"][0]), Env(d["σ"][1])),
            "out": tuple(value_key(v) for v in d["out"])}


label_dicts = st.fixed_dictionaries({"ρ": envs, "σ": st.tuples(envs, envs), "out": emits})


@settings(max_examples=300, deadline=None)
@given(label_dicts, label_dicts)
def test_compose_matches_dict_oracle(sig3, a, b):
    want = dict_compose(KINDS, _norm(a), _norm(b))
    try:
        got = compose(_to_label(sig3, a), _to_label(sig3, b))
    except CompositionError:
        got = None
    if want is None:
        assert got is None
        return
    assert got is not None
    assert got.arrows[0] == RO(want["ρ"])
    assert got.arrows[1] == RW(*want["σ"])
    assert tuple(value_key(v) for v in got.arrows[2].emitted) == want["out"]


@settings(max_examples=300, deadline=None)
@given(label_dicts)
def test_composable_pairs_compose(sig3, d):
    a = _to_label(sig3, d)
    b = a.target.identity()
    c = Label(sig3, (RO(a.arrows[0].obj), RW(a.arrows[1].post, Env({"x": 9})), WO([1])))
    assert compose(compose(a, b), c) == compose(a, compose(b, c))
    assert compose(a.source.identity(), a) == a and compose(a, b) == a


@settings(max_examples=300, deadline=None)
@given(label_dicts, st.sets(st.sampled_from(["ρ", "σ", "out"])))
def test_isomorphism_round_trip_property(sig3, d, m):
    label = _to_label(sig3, d)
    pm, pu = project_mentioned(label, m), project_unmentioned(label, m)
    back = assemble(pm, pu, sig3)
    assert back == label
    assert project_mentioned(back, m) == pm and project_unmentioned(back, m) == pu


@settings(max_examples=300, deadline=None)
@given(label_dicts)
def test_unobservable_iff_identity_at_source(sig3, d):
    label = _to_label(sig3, d)
    assert is_unobservable(label) == (label == label.source.identity())
    assert is_unobservable(label) == dict_unobservable(KINDS, {
        "ρ": d["ρ"], "σ": (Env(d["σ"][0]), Env(d["σ"][1])), "out": d["out"]})
