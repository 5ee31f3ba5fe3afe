from __future__ import annotations

import csv
import io

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evoc.domain import (
    Action,
    SubAction,
    Template,
    TemplateSet,
    all_sub_actions,
    parse_sub_action,
    parse_template,
    parse_template_set,
)
from evoc.fitness import (
    ChainingContractError,
    ConstraintError,
    action_fitness,
    enumerate_landscape,
    fitness_table,
    is_novel,
    landscape_csv,
    load_constraints,
    parse_constraints,
    sub_action_fitness,
    success_table,
    successful,
    template_order,
    template_weight,
    validate_template_set,
)
from evoc.domain import DATA_DIR

P = parse_sub_action
T = parse_template
OPTIMA = {P("01-11-11"), P("01-11-1-1"), P("0-11-111"), P("0-11-11-1")}

sub_actions = st.tuples(*[st.sampled_from((-1, 0, 1))] * 6).map(SubAction)
templates = st.tuples(*[st.sampled_from((-1, 0, 1, None))] * 6).map(Template)
template_sets = st.lists(templates, min_size=1, max_size=8, unique=True).map(
    lambda ts: TemplateSet("h", tuple(ts))
)


def ts_of(*texts: str) -> TemplateSet:
    return TemplateSet("t", tuple(T(x) for x in texts))


@pytest.mark.parametrize(
    "t, d, w",
    [("0*****", "01-11-11", 1), ("0*****", "111110", 0), ("******", "-1-1-1-1-1-1", 1)],
)
def test_template_weight(t, d, w):
    assert template_weight(T(t), P(d)) == w


@pytest.mark.parametrize("t, order", [("0*****", 1), ("1*11**", 3), ("******", 0), ("01-11-11", 6)])
def test_template_order(t, order):
    assert template_order(T(t)) == order


def test_signed_sum_order():
    assert template_order(T("1*-1-1**"), "signed_sum") == -1
    with pytest.raises(ValueError):
        template_order(T("1*****"), "bogus")  # type: ignore[arg-type]


def test_pinned_values(ff1):
    assert sub_action_fitness(SubAction.neutral(), ff1) == 6
    assert sub_action_fitness(P("111110"), ff1) == 31
    assert sub_action_fitness(P("010000"), ts_of("******")) == 0


def test_argmax_is_four_optima(ff1):
    table = enumerate_landscape(ff1)
    assert table.argmax == OPTIMA
    assert table.max_fitness == 40


def test_single_template_landscape():
    table = enumerate_landscape(ts_of("0*****"))
    ones = [d for d, f in table.entries.items() if f == 1]
    assert len(ones) == 243
    assert all(d[0] == 0 for d in ones)
    assert set(table.entries.values()) == {0, 1}


@pytest.mark.parametrize("name", ["ff1", "ff2"])
def test_three_routes_agree(name, request):
    ts = request.getfixturevalue(name)
    oracle = enumerate_landscape(ts)
    table = fitness_table(ts)
    for d in all_sub_actions():
        f = oracle[d]
        assert sub_action_fitness(d, ts) == f
        assert table[d.code] == f


@pytest.mark.parametrize("name", ["ff1", "ff2"])
def test_success_table_agrees(name, request):
    ts = request.getfixturevalue(name)
    succ = success_table(ts)
    for d in all_sub_actions():
        assert bool(succ[d.code]) == successful(d, ts)


def test_ff2_differs_from_ff1(ff1, ff2):
    t2 = enumerate_landscape(ff2)
    assert t2.argmax.isdisjoint(OPTIMA)
    assert t2[SubAction.neutral()] == 6
    # the old optima are poor under the new function
    assert all(t2[d] < 10 for d in OPTIMA)


@settings(max_examples=60, deadline=None)
@given(template_sets, templates)
def test_adding_a_template_never_lowers_fitness(ts, extra):
    if extra in ts.templates:
        return
    bigger = TemplateSet("h", ts.templates + (extra,))
    before, after = fitness_table(ts), fitness_table(bigger)
    assert (after >= before).all()


@given(templates, st.integers(0, 5))
def test_wildcarding_widens_match_set(t, k):
    wider = Template(tuple(None if j == k else s for j, s in enumerate(t.slots)))
    for d in all_sub_actions()[::7]:
        assert template_weight(wider, d) >= template_weight(t, d)


@settings(max_examples=60, deadline=None)
@given(template_sets, sub_actions)
def test_successful_iff_some_template_matches(ts, d):
    assert successful(d, ts) == any(template_weight(t, d) for t in ts.templates)


def test_successful_handcrafted():
    assert successful(P("01-11-11"), ts_of("0*****"))
    assert successful(P("111111"), ts_of("******"))  # order-0 match still counts
    assert not successful(P("100000"), ts_of("000000"))


def test_is_novel():
    d = P("01-11-11")
    assert not is_novel(d, d)
    assert is_novel(P("11-11-11"), d)
    assert is_novel(P("0-11-11-1"), d)


def test_chained_fitness_example():
    # a synthetic set giving the last sub-action exactly 14
    ts = ts_of("01-11-11", "01-11-1*", "**-1***", "0*****", "*1****")
    last = P("01-11-11")
    assert sub_action_fitness(last, ts) == 14
    a = Action(tuple([P("000000")] * 6 + [last]))
    assert len(a) == 7
    assert action_fitness(a, ts, chaining_enabled=True) == 21


def test_chaining_off_single_and_on(ff1):
    a = Action((SubAction.neutral(),))
    assert action_fitness(a, ff1, chaining_enabled=False) == 6
    assert action_fitness(a, ff1, chaining_enabled=True) == 6 + 1


def test_chaining_off_rejects_long_action(ff1):
    with pytest.raises(ChainingContractError):
        action_fitness(Action((SubAction.neutral(),) * 2), ff1, chaining_enabled=False)


@given(st.lists(sub_actions, min_size=1, max_size=20))
def test_chained_fitness_linear_in_length(subs):
    ts = parse_template_set((DATA_DIR / "ff1.txt").read_text())
    a = Action(tuple(subs))
    longer = Action(tuple(subs[:-1]) + (subs[0],) + (subs[-1],))
    assert action_fitness(longer, ts, True) == action_fitness(a, ts, True) + 1


def test_landscape_csv(ff1):
    text = landscape_csv(enumerate_landscape(ff1))
    rows = list(csv.DictReader(io.StringIO(text)))
    assert len(rows) == 729
    assert [r["sub_action"] for r in rows] == sorted(r["sub_action"] for r in rows)
    optimal = {r["sub_action"] for r in rows if r["is_optimal"] == "1"}
    assert optimal == {str(d) for d in OPTIMA}


def test_shipped_constraints_pass(ff1):
    report = validate_template_set(ff1, load_constraints(DATA_DIR / "ff1_constraints.txt"))
    assert report.passed
    text = report.format()
    assert "observed=31" in text
    assert "MISMATCH (soft)  F(01-11-11) expected=14 observed=40" in text


def test_shipped_ff2_constraints_pass(ff2):
    report = validate_template_set(ff2, load_constraints(DATA_DIR / "ff2_constraints.txt"))
    assert report.passed


def test_failing_hard_constraint_reports_observed(ff1):
    report = validate_template_set(ff1, parse_constraints("fitness 000000 7\n"))
    assert not report.passed
    assert "FAIL" in report.format() and "observed=6" in report.format()


def test_soft_failure_does_not_fail(ff1):
    report = validate_template_set(ff1, parse_constraints("soft fitness 000000 7\n"))
    assert report.passed


@pytest.mark.parametrize("bad", ["fitness 000000\n", "bogus 1 2\n", "fitness 00x000 3\n", "# only\n", "soft\n"])
def test_malformed_constraints(bad):
    with pytest.raises(ConstraintError):
        parse_constraints(bad)
