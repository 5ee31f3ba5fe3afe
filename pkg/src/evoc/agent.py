"""Single-agent cognition: feature detection, trend learning, invention,
contextual focus and the adopt-if-fitter rule.

The agent's network is realised as a fixed feature computation (the hidden
concept nodes) plus running fitness statistics conditioned on the SYMMETRY
and MOVEMENT features. Those statistics bias which value a changing body
part moves to.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Literal

import numpy as np

from . import _kernels as K
from .domain import Action, BodyPart, SubAction, TemplateSet
from .fitness import OrderMode, action_fitness, sub_action_fitness, successful

RCC_FIXED = 1.0 / 6.0
DEFAULT_MAX_ACTION_LENGTH = 100

Feature = Literal["symmetry", "movement"]
_FEATURE_COLS = {"symmetry": (0, 1), "movement": (2, 3)}

_PAIRS = ((BodyPart.LEFT_ARM, BodyPart.RIGHT_ARM), (BodyPart.LEFT_LEG, BodyPart.RIGHT_LEG))
_GROUPS = {
    "left": (BodyPart.LEFT_ARM, BodyPart.LEFT_LEG),
    "right": (BodyPart.RIGHT_ARM, BodyPart.RIGHT_LEG),
    "arm": (BodyPart.LEFT_ARM, BodyPart.RIGHT_ARM),
    "leg": (BodyPart.LEFT_LEG, BodyPart.RIGHT_LEG),
}


@dataclass(frozen=True)
class HiddenActivations:
    movement: float
    symmetry: float
    left: float
    right: float
    arm: float
    leg: float
    opposite: float


def compute_hidden_activations(d: SubAction) -> HiddenActivations:
    c = d.components
    same = sum(1 for p, q in _PAIRS if c[p] != 0 and c[p] == c[q])
    opposite = sum(1 for p, q in _PAIRS if c[p] != 0 and c[p] == -c[q])
    groups = {
        name: sum(1 for part in parts if c[part] != 0) / len(parts)
        for name, parts in _GROUPS.items()
    }
    return HiddenActivations(
        movement=sum(1 for v in c if v != 0) / 6,
        symmetry=same / 2,
        opposite=opposite / 2,
        **groups,
    )


@dataclass(frozen=True)
class TrendStats:
    """Fitness sums and counts, split by whether a feature was present.

    Column order: symmetric, asymmetric, moving, still.
    """

    sums: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)
    counts: tuple[int, int, int, int] = (0, 0, 0, 0)

    def mean(self, feature: Feature, present: bool) -> float | None:
        col = _FEATURE_COLS[feature][0 if present else 1]
        return self.sums[col] / self.counts[col] if self.counts[col] else None

    def bias(self, feature: Feature) -> float:
        """Bounded normalised difference of means, in ``(-1, 1)``; 0 without evidence."""
        p, a = _FEATURE_COLS[feature]
        return float(K.trend_bias(self.sums[p], self.counts[p], self.sums[a], self.counts[a]))


def update_trend(stats: TrendStats, d: SubAction, f: int) -> TrendStats:
    h = compute_hidden_activations(d)
    sums = list(stats.sums)
    counts = list(stats.counts)
    for value, (p, a) in ((h.symmetry, (0, 1)), (h.movement, (2, 3))):
        col = p if value > 0.5 else a
        sums[col] += f
        counts[col] += 1
    return TrendStats(tuple(sums), tuple(counts))  # type: ignore[arg-type]


@dataclass(frozen=True)
class CfParams:
    a: float = -0.005
    b: float = 0.8
    rcc_min: float = 1.0 / 36.0
    rcc_max: float = 1.0

    def __post_init__(self) -> None:
        problems = []
        if not self.a < 0:
            problems.append(f"a must be negative (got {self.a})")
        if not 0 < self.b < 1:
            problems.append(f"b must lie in (0, 1) (got {self.b})")
        if not 0 < self.rcc_min <= RCC_FIXED <= self.rcc_max <= 1:
            problems.append(
                f"need 0 < rcc_min <= 1/6 <= rcc_max <= 1 (got {self.rcc_min}, {self.rcc_max})"
            )
        if problems:
            raise ValueError("; ".join(problems))


@dataclass(frozen=True)
class AgentState:
    current_action: Action
    current_fitness: int
    previous_fitness: int | None = None
    rcc: float = RCC_FIXED
    trend: TrendStats = field(default_factory=TrendStats)
    chaining_enabled: bool = False
    cf_enabled: bool = False
    max_action_length: int = DEFAULT_MAX_ACTION_LENGTH

    def __post_init__(self) -> None:
        if not self.chaining_enabled and len(self.current_action) != 1:
            raise ValueError("an agent without chaining implements single sub-actions")


def new_agent(
    ts: TemplateSet,
    chaining_enabled: bool = False,
    cf_enabled: bool = False,
    params: CfParams | None = None,
    action: Action | None = None,
    order_mode: OrderMode = "count",
    seed_on_sub_action: bool = True,
) -> AgentState:
    """An agent implementing ``action`` (default: immobile), with RCC seeded.

    The initial RCC is driven by the fitness of the last sub-action unless
    ``seed_on_sub_action`` is false, in which case the chained action's
    fitness (length bonus included) is used.
    """
    params = params or CfParams()
    action = action or Action((SubAction.neutral(),))
    f = action_fitness(action, ts, chaining_enabled, order_mode)
    seed_f = sub_action_fitness(action.last, ts, order_mode) if seed_on_sub_action else f
    rcc = initial_rcc(seed_f, params) if cf_enabled else RCC_FIXED
    return AgentState(action, f, None, rcc, TrendStats(), chaining_enabled, cf_enabled)


def initial_rcc(f_current: int, params: CfParams) -> float:
    return float(K.initial_rcc(f_current, params.b, params.rcc_min, params.rcc_max))


def update_rcc(agent: AgentState, f_new: int, f_old: int, params: CfParams) -> float:
    return float(K.clamp(agent.rcc + params.a * float(f_new - f_old), params.rcc_min, params.rcc_max))


def mutate(
    d: SubAction, rcc: float, trend: TrendStats, u_change: np.ndarray, u_value: np.ndarray
) -> SubAction:
    """Change each component with probability ``rcc`` given pre-drawn uniforms."""
    code = K.mutate_code(
        d.code,
        rcc,
        trend.bias("symmetry"),
        trend.bias("movement"),
        np.asarray(u_change, dtype=np.float64),
        np.asarray(u_value, dtype=np.float64),
        K.DECODE,
        K.PARTNER,
    )
    return SubAction.from_code(int(code))


def invent(agent: AgentState, ts: TemplateSet, rng: np.random.Generator) -> Action:
    """Propose one candidate action derived from the agent's current one.

    Without chaining the only sub-action is mutated. With chaining the last
    sub-action is mutated; a novel and successful result is appended, any
    other result replaces the last sub-action.
    """
    u_change = rng.random(6)
    u_value = rng.random(6)
    subs = agent.current_action.sub_actions
    last = subs[-1]
    new = mutate(last, agent.rcc, agent.trend, u_change, u_value)
    if (
        agent.chaining_enabled
        and new != last
        and successful(new, ts)
        and len(subs) < agent.max_action_length
    ):
        return Action(subs + (new,))
    return Action(subs[:-1] + (new,))


def evaluate_and_adopt(
    agent: AgentState,
    candidate: Action,
    ts: TemplateSet,
    params: CfParams | None = None,
    order_mode: OrderMode = "count",
) -> AgentState:
    f_new = action_fitness(candidate, ts, agent.chaining_enabled, order_mode)
    f_old = agent.current_fitness
    trend = update_trend(agent.trend, candidate.last, f_new)
    rcc = agent.rcc
    if agent.cf_enabled:
        rcc = update_rcc(agent, f_new, f_old, params or CfParams())
    if f_new > f_old:
        return replace(
            agent,
            current_action=candidate,
            current_fitness=f_new,
            previous_fitness=f_old,
            rcc=rcc,
            trend=trend,
        )
    return replace(agent, rcc=rcc, trend=trend)
