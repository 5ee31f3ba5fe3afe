from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import chisquare

from evoc.agent import (
    RCC_FIXED,
    AgentState,
    CfParams,
    TrendStats,
    compute_hidden_activations,
    evaluate_and_adopt,
    initial_rcc,
    invent,
    mutate,
    new_agent,
    update_rcc,
    update_trend,
)
from evoc.domain import Action, SubAction, TemplateSet, parse_sub_action, parse_template
from evoc.fitness import action_fitness, sub_action_fitness, successful

P = parse_sub_action
sub_actions = st.tuples(*[st.sampled_from((-1, 0, 1))] * 6).map(SubAction)


class Fixed:
    """Stand-in generator replaying queued uniform arrays."""

    def __init__(self, *arrays):
        self.queue = [np.asarray(a, dtype=float) for a in arrays]

    def random(self, n):
        out = self.queue.pop(0)
        assert out.shape == (n,)
        return out


def test_hidden_activations_neutral():
    h = compute_hidden_activations(SubAction.neutral())
    assert (h.movement, h.symmetry, h.opposite) == (0, 0, 0)


def test_hidden_activations_both_arms_up():
    h = compute_hidden_activations(P("011000"))
    assert h.symmetry == 0.5
    assert h.movement == pytest.approx(2 / 6)
    assert h.arm == 1.0 and h.leg == 0.0


def test_hidden_activations_opposite():
    h = compute_hidden_activations(P("01-11-10"))
    assert h.opposite == 1.0 and h.symmetry == 0.0
    assert h.left == 1.0 and h.right == 1.0


def test_trend_needs_both_streams():
    stats = update_trend(TrendStats(), P("011110"), 10)
    assert stats.mean("symmetry", True) == 10
    assert stats.mean("symmetry", False) is None
    assert stats.bias("symmetry") == 0.0


def test_trend_bias_direction():
    stats = TrendStats()
    for _ in range(5):
        stats = update_trend(stats, P("011110"), 20)  # symmetric
        stats = update_trend(stats, P("01-11-10"), 10)  # not symmetric
    assert stats.mean("symmetry", True) == 20
    assert stats.mean("symmetry", False) == 10
    assert stats.bias("symmetry") == pytest.approx((20 - 10) / (20 + 10 + 1))
    assert stats.bias("symmetry") > 0


def test_trend_equal_means_zero_bias():
    stats = TrendStats(sums=(30.0, 15.0, 0.0, 0.0), counts=(2, 1, 0, 0))
    assert stats.bias("symmetry") == 0.0


@given(sub_actions)
def test_mutate_rcc_zero_is_identity(d):
    u = np.full(6, 0.5)
    assert mutate(d, 0.0, TrendStats(), u, u) == d


@given(sub_actions, st.lists(st.floats(0, 0.999), min_size=6, max_size=6))
def test_mutate_rcc_one_changes_every_component(d, uv):
    new = mutate(d, 1.0, TrendStats(), np.zeros(6), np.array(uv))
    assert all(a != b for a, b in zip(new.components, d.components))


@pytest.mark.parametrize("start", ["000000", "111111", "-1-1-1-1-1-1", "01-110-1"])
def test_unbiased_alternatives_equiprobable(start):
    d = P(start)
    rng = np.random.default_rng(12345)
    n = 10_000
    counts = np.zeros((6, 2), dtype=int)
    for _ in range(n):
        new = mutate(d, 1.0, TrendStats(), np.zeros(6), rng.random(6))
        for j in range(6):
            alts = sorted({-1, 0, 1} - {d[j]})
            counts[j, alts.index(new[j])] += 1
    for j in range(6):
        assert chisquare(counts[j]).pvalue > 0.01, (j, counts[j])


def test_movement_bias_favours_moving_values():
    # movement-present outcomes were much fitter, so from a moving part the
    # other moving value beats neutral
    stats = TrendStats(sums=(0.0, 0.0, 400.0, 10.0), counts=(0, 0, 10, 10))
    assert stats.bias("movement") > 0.9
    rng = np.random.default_rng(1)
    d = P("100000")
    to_moving = 0
    for _ in range(2000):
        new = mutate(d, 1.0, stats, np.zeros(6), rng.random(6))
        to_moving += new[0] == -1
    assert to_moving / 2000 > 0.85


def test_invent_rcc_zero_returns_current(ff1):
    agent = new_agent(ff1, chaining_enabled=True)
    agent = AgentState(agent.current_action, agent.current_fitness, rcc=0.0, chaining_enabled=True)
    cand = invent(agent, ff1, np.random.default_rng(0))
    assert cand == agent.current_action


def test_invent_chaining_appends_novel_successful(ff1):
    start = Action((P("000000"),))
    agent = AgentState(start, action_fitness(start, ff1, True), chaining_enabled=True, rcc=1.0)
    # every component flips to its upper alternative: 111111
    cand = invent(agent, ff1, Fixed(np.zeros(6), np.full(6, 0.99)))
    assert successful(P("111111"), ff1)
    assert cand.sub_actions == (P("000000"), P("111111"))


def test_invent_chaining_replaces_unsuccessful():
    ts = TemplateSet("t", (parse_template("0*****"),))
    start = Action((P("000000"), P("010000")))
    agent = AgentState(start, 3, chaining_enabled=True, rcc=1.0)
    # upper alternatives: 0 -> 1 and 1 -> 0, giving 101111, which misses the template
    cand = invent(agent, ts, Fixed(np.zeros(6), np.full(6, 0.99)))
    assert cand.sub_actions == (P("000000"), P("101111"))


def test_invent_without_chaining_stays_single(ff1):
    agent = new_agent(ff1)
    rng = np.random.default_rng(3)
    for _ in range(50):
        assert len(invent(agent, ff1, rng)) == 1


def test_invent_respects_length_cap(ff1):
    subs = tuple(P("000000") if k % 2 else P("011110") for k in range(4))
    agent = AgentState(Action(subs), 10, chaining_enabled=True, rcc=1.0, max_action_length=4)
    cand = invent(agent, ff1, Fixed(np.zeros(6), np.full(6, 0.99)))
    assert len(cand) == 4


@pytest.mark.parametrize(
    "f, expected",
    [(0, 1.0), (6, 0.8**6), (1000, 1 / 36)],
)
def test_initial_rcc(f, expected):
    assert initial_rcc(f, CfParams()) == pytest.approx(expected, rel=1e-12)
    assert initial_rcc(6, CfParams()) == pytest.approx(0.262144, abs=1e-12)


def _agent(rcc: float, ff1, cf: bool = True) -> AgentState:
    base = new_agent(ff1, cf_enabled=cf)
    return AgentState(base.current_action, 6, rcc=rcc, cf_enabled=cf)


def test_update_rcc_examples(ff1):
    p = CfParams()
    a = _agent(0.2, ff1)
    assert update_rcc(a, 0, 10, p) == pytest.approx(0.25, abs=1e-12)
    assert update_rcc(a, 10, 10, p) == 0.2
    assert update_rcc(a, 110, 10, p) == p.rcc_min


@settings(max_examples=200)
@given(st.floats(1 / 36, 1.0), st.integers(-200, 200), st.integers(-200, 200))
def test_rcc_direction_and_bounds(rcc, f_new, f_old):
    p = CfParams()
    agent = AgentState(Action((SubAction.neutral(),)), f_old, rcc=rcc, cf_enabled=True)
    r = update_rcc(agent, f_new, f_old, p)
    assert p.rcc_min <= r <= p.rcc_max
    if f_new < f_old:
        assert r >= rcc
    elif f_new > f_old:
        assert r <= rcc
    else:
        assert r == rcc


@settings(max_examples=100)
@given(st.floats(1 / 36, 1.0), st.integers(-50, 50), st.integers(-50, 50), st.integers(-50, 50))
def test_rcc_non_increasing_in_delta(rcc, f_old, d1, d2):
    p = CfParams()
    agent = AgentState(Action((SubAction.neutral(),)), f_old, rcc=rcc, cf_enabled=True)
    lo, hi = sorted((d1, d2))
    assert update_rcc(agent, f_old + lo, f_old, p) >= update_rcc(agent, f_old + hi, f_old, p)


@settings(max_examples=100)
@given(st.lists(st.integers(-100, 100), max_size=40))
def test_rcc_stays_clamped_over_sequences(deltas):
    p = CfParams()
    rcc = RCC_FIXED
    for d in deltas:
        agent = AgentState(Action((SubAction.neutral(),)), 0, rcc=rcc, cf_enabled=True)
        rcc = update_rcc(agent, d, 0, p)
        assert p.rcc_min <= rcc <= p.rcc_max


def test_cf_params_validation():
    with pytest.raises(ValueError, match="negative"):
        CfParams(a=0.1)
    with pytest.raises(ValueError):
        CfParams(b=1.5)
    with pytest.raises(ValueError):
        CfParams(rcc_min=0.5)


def test_new_agent_rcc(ff1):
    assert new_agent(ff1).rcc == RCC_FIXED
    assert new_agent(ff1, cf_enabled=True).rcc == pytest.approx(0.8**6)
    assert new_agent(ff1, chaining_enabled=True, cf_enabled=True).rcc == pytest.approx(0.8**6)
    spec_basis = new_agent(ff1, chaining_enabled=True, cf_enabled=True, seed_on_sub_action=False)
    assert spec_basis.rcc == pytest.approx(0.8**7)
    assert new_agent(ff1, chaining_enabled=True).current_fitness == 7


def test_adopt_strictly_fitter(ff1):
    agent = new_agent(ff1)
    better = Action((P("111110"),))
    out = evaluate_and_adopt(agent, better, ff1)
    assert out.current_action == better and out.current_fitness == 31
    assert out.previous_fitness == 6


def test_tie_keeps_incumbent():
    ts = TemplateSet("t", (parse_template("*****0"), parse_template("****0*")))
    agent = AgentState(Action((P("000000"),)), 2)
    out = evaluate_and_adopt(agent, Action((P("100000"),)), ts)
    assert out.current_action == agent.current_action


def test_worse_rejected_and_rcc_rises(ff1):
    agent = AgentState(Action((P("000000"),)), 6, rcc=0.2, cf_enabled=True)
    ts = TemplateSet("t", (parse_template("0*****"), parse_template("*0****")))
    # candidate scores 2 against an incumbent of 6
    out = evaluate_and_adopt(agent, Action((P("001111"),)), ts)
    assert out.current_action == agent.current_action
    assert out.rcc == pytest.approx(0.22, abs=1e-12)


def test_cf_off_keeps_fixed_rcc(ff1):
    agent = new_agent(ff1)
    out = evaluate_and_adopt(agent, Action((P("-1-1-1-1-1-1"),)), ff1)
    assert out.rcc == RCC_FIXED


def test_trend_updates_even_when_rejected(ff1):
    agent = new_agent(ff1)
    cand = P("-100000")
    f = sub_action_fitness(cand, ff1)
    assert f < agent.current_fitness
    out = evaluate_and_adopt(agent, Action((cand,)), ff1)
    assert out.current_action == agent.current_action
    # neither symmetric nor moving: both "absent" columns receive f
    assert out.trend.counts == (0, 1, 0, 1)
    assert out.trend.sums == (0.0, float(f), 0.0, float(f))
