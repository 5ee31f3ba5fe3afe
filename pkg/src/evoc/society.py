"""A toroidal grid of agents that invent, imitate and adopt fitter actions."""

from __future__ import annotations

import copy
import io
from dataclasses import dataclass, field, replace
from typing import Literal

import numpy as np

from . import _kernels as K
from .agent import RCC_FIXED, AgentState, CfParams, TrendStats
from .domain import NEUTRAL_CODE, Action, TemplateSet
from .fitness import OrderMode, fitness_table, success_table
from .rng import RandomStreams

Neighborhood = Literal["moore", "von_neumann"]
# fitness fed to the initial-RCC rule: the last sub-action alone, or the
# whole chained action including its length bonus
RccSeedBasis = Literal["sub_action", "action"]
Backend = Literal["numba", "numpy"]

_OFFSETS = {
    "moore": ((-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)),
    "von_neumann": ((-1, 0), (0, -1), (0, 1), (1, 0)),
}


class ConfigError(ValueError):
    """Invalid configuration; the message lists every violation."""


@dataclass(frozen=True)
class SocietyConfig:
    grid_width: int = 10
    grid_height: int = 10
    neighborhood: Neighborhood = "moore"
    invention_probability: float = 0.5
    iterations: int = 100
    switch_iteration: int | None = 50
    chaining_enabled: bool = False
    cf_enabled: bool = False
    cf_params: CfParams = field(default_factory=CfParams)
    seed: int = 0
    max_action_length: int = 100
    order_mode: OrderMode = "count"
    rcc_seed_basis: RccSeedBasis = "sub_action"

    @property
    def n_agents(self) -> int:
        return self.grid_width * self.grid_height

    def violations(self) -> list[str]:
        out = []
        if self.grid_width < 1 or self.grid_height < 1:
            out.append(f"grid must be positive, got {self.grid_width}x{self.grid_height}")
        elif self.n_agents < 2:
            out.append("grid needs at least 2 agents")
        if self.neighborhood not in _OFFSETS:
            out.append(f"unknown neighborhood {self.neighborhood!r}")
        if not 0.0 <= self.invention_probability <= 1.0:
            out.append(f"invention_probability must be in [0, 1], got {self.invention_probability}")
        if self.iterations < 1:
            out.append(f"iterations must be positive, got {self.iterations}")
        if self.switch_iteration is not None:
            if self.switch_iteration < 1:
                out.append(f"switch_iteration must be positive, got {self.switch_iteration}")
            elif self.switch_iteration >= self.iterations:
                out.append(
                    f"switch_iteration {self.switch_iteration} must be below iterations {self.iterations}"
                )
        if self.max_action_length < 1:
            out.append(f"max_action_length must be positive, got {self.max_action_length}")
        if not 0 <= self.seed < 2**64:
            out.append(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.order_mode not in ("count", "signed_sum"):
            out.append(f"unknown order_mode {self.order_mode!r}")
        if self.rcc_seed_basis not in ("sub_action", "action"):
            out.append(f"unknown rcc_seed_basis {self.rcc_seed_basis!r}")
        return out

    def validate(self) -> None:
        problems = self.violations()
        if problems:
            raise ConfigError("invalid configuration: " + "; ".join(problems))


def neighbor_table(cfg: SocietyConfig) -> np.ndarray:
    """Distinct torus neighbours of each agent, shape ``(n, k)``.

    Agent ``y * width + x`` sits at column ``x``, row ``y``. On tiny grids the
    wrapped offsets can coincide or hit the agent itself; those are dropped
    (every agent keeps the same count by translation symmetry).
    """
    w, h = cfg.grid_width, cfg.grid_height
    rows = []
    for y in range(h):
        for x in range(w):
            me = y * w + x
            seen: list[int] = []
            for dy, dx in _OFFSETS[cfg.neighborhood]:
                j = ((y + dy) % h) * w + (x + dx) % w
                if j != me and j not in seen:
                    seen.append(j)
            rows.append(seen)
    return np.array(rows, dtype=np.int64)


@dataclass
class Society:
    cfg: SocietyConfig
    ff1: TemplateSet
    ff2: TemplateSet | None
    actions: np.ndarray
    lengths: np.ndarray
    fitness: np.ndarray
    previous: np.ndarray
    rcc: np.ndarray
    trend_sum: np.ndarray
    trend_cnt: np.ndarray
    neighbors: np.ndarray
    tables: tuple[np.ndarray, np.ndarray | None]
    succ: tuple[np.ndarray, np.ndarray | None]
    iteration: int = 0
    active: int = 0  # 0 before the switch, 1 after
    last_adopted: np.ndarray | None = None
    last_mode: np.ndarray | None = None

    @property
    def n_agents(self) -> int:
        return int(self.lengths.shape[0])

    @property
    def active_template_set(self) -> TemplateSet:
        return self.ff1 if self.active == 0 else self.ff2  # type: ignore[return-value]

    @property
    def table(self) -> np.ndarray:
        return self.tables[self.active]  # type: ignore[return-value]

    def action(self, i: int) -> Action:
        return Action.from_codes(self.actions[i, : self.lengths[i]])

    def agent(self, i: int) -> AgentState:
        prev = int(self.previous[i])
        return AgentState(
            current_action=self.action(i),
            current_fitness=int(self.fitness[i]),
            previous_fitness=None if prev < 0 else prev,
            rcc=float(self.rcc[i]),
            trend=TrendStats(
                tuple(float(v) for v in self.trend_sum[i]),  # type: ignore[arg-type]
                tuple(int(v) for v in self.trend_cnt[i]),  # type: ignore[arg-type]
            ),
            chaining_enabled=self.cfg.chaining_enabled,
            cf_enabled=self.cfg.cf_enabled,
            max_action_length=self.cfg.max_action_length,
        )

    @property
    def agents(self) -> list[AgentState]:
        return [self.agent(i) for i in range(self.n_agents)]

    def action_fitness(self, i: int) -> int:
        f = int(self.table[self.actions[i, self.lengths[i] - 1]])
        return f + int(self.lengths[i]) if self.cfg.chaining_enabled else f

    def copy(self) -> Society:
        return copy.deepcopy(self)


def init_society(
    cfg: SocietyConfig, ff1: TemplateSet, ff2: TemplateSet | None = None
) -> Society:
    """Every agent starts immobile: one all-neutral sub-action."""
    cfg.validate()
    if cfg.switch_iteration is not None and ff2 is None:
        raise ConfigError("invalid configuration: switch_iteration set but no second template set")
    n = cfg.n_agents
    width = cfg.max_action_length if cfg.chaining_enabled else 1
    actions = np.full((n, width), -1, dtype=np.int16)
    actions[:, 0] = NEUTRAL_CODE
    lengths = np.ones(n, dtype=np.int64)
    t1 = fitness_table(ff1, cfg.order_mode)
    t2 = fitness_table(ff2, cfg.order_mode) if ff2 is not None else None
    f_sub = int(t1[NEUTRAL_CODE])
    f0 = f_sub + (1 if cfg.chaining_enabled else 0)
    p = cfg.cf_params
    seed_f = f_sub if cfg.rcc_seed_basis == "sub_action" else f0
    rcc0 = K.initial_rcc(seed_f, p.b, p.rcc_min, p.rcc_max) if cfg.cf_enabled else RCC_FIXED
    return Society(
        cfg=cfg,
        ff1=ff1,
        ff2=ff2,
        actions=actions,
        lengths=lengths,
        fitness=np.full(n, f0, dtype=np.int64),
        previous=np.full(n, -1, dtype=np.int64),
        rcc=np.full(n, float(rcc0)),
        trend_sum=np.zeros((n, 4)),
        trend_cnt=np.zeros((n, 4), dtype=np.int64),
        neighbors=neighbor_table(cfg),
        tables=(t1, t2),
        succ=(success_table(ff1), success_table(ff2) if ff2 is not None else None),
    )


def imitate(agent_index: int, society: Society, rng: np.random.Generator) -> Action:
    """Lazy search: scan neighbours in random order, copy the first fitter action."""
    nbrs = society.neighbors[agent_index]
    order = K.scan_order(rng.random(len(nbrs)), len(nbrs))
    own = society.fitness[agent_index]
    for q in order:
        j = int(nbrs[q])
        if society.fitness[j] > own:
            return society.action(j)
    return society.action(agent_index)


def diversity(society: Society) -> int:
    """Number of distinct actions (whole-sequence equality) in the society."""
    return len({society.action(i).codes for i in range(society.n_agents)})


def _resolve_backend(backend: Backend | None) -> Backend:
    backend = backend or K.DEFAULT_BACKEND  # type: ignore[assignment]
    if backend == "numba" and not K.HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is unavailable or disabled")
    if backend not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {backend!r}")
    return backend  # type: ignore[return-value]


def _switch(soc: Society, backend: Backend) -> None:
    soc.active = 1
    p = soc.cfg.cf_params
    fn = K.apply_switch_loop if backend == "numba" else K.apply_switch_vec
    fn(
        soc.actions, soc.lengths, soc.fitness, soc.previous, soc.rcc, soc.table,
        soc.cfg.chaining_enabled, soc.cfg.cf_enabled, p.b, p.rcc_min, p.rcc_max,
        soc.cfg.rcc_seed_basis == "sub_action",
    )


def step(
    society: Society, rng: RandomStreams | None = None, backend: Backend | None = None
) -> Society:
    """Advance one synchronous iteration; returns a new society."""
    cfg = society.cfg
    if society.iteration >= cfg.iterations:
        raise ValueError(f"society already ran {cfg.iterations} iterations")
    backend = _resolve_backend(backend)
    rng = rng or RandomStreams(cfg.seed)
    soc = society.copy()
    t = soc.iteration + 1
    draws = rng.iteration_draws(t, soc.n_agents)
    n = soc.n_agents
    adopted = np.zeros(n, dtype=np.int8)
    mode = np.zeros(n, dtype=np.int8)
    p = cfg.cf_params
    args = (
        soc.actions, soc.lengths, soc.fitness, soc.previous, soc.rcc, soc.trend_sum, soc.trend_cnt,
        draws, soc.neighbors, soc.table, soc.succ[soc.active], cfg.invention_probability,
        cfg.chaining_enabled, cfg.cf_enabled, p.a, p.rcc_min, p.rcc_max, adopted, mode,
    )
    if backend == "numba":
        K.step_loop(*args, K.DECODE, K.PARTNER, K.SYM_PRESENT, K.MOVE_PRESENT)
    else:
        K.step_vec(*args)
    soc.iteration = t
    if cfg.switch_iteration is not None and t == cfg.switch_iteration:
        _switch(soc, backend)
    soc.last_adopted = adopted
    soc.last_mode = mode
    return soc


@dataclass(frozen=True)
class RunTrace:
    """Per-iteration, per-agent records, arrays of shape ``(iterations, n)``."""

    fitness: np.ndarray
    action_length: np.ndarray
    rcc: np.ndarray
    adopted: np.ndarray
    mode: np.ndarray


@dataclass(frozen=True)
class RunMetrics:
    """Society-level series; entry ``t`` describes the state after iteration ``t + 1``."""

    mean_fitness: np.ndarray
    diversity: np.ndarray
    mean_rcc: np.ndarray
    mean_action_length: np.ndarray
    trace: RunTrace | None = None

    @property
    def iterations(self) -> np.ndarray:
        return np.arange(1, len(self.mean_fitness) + 1)


def run(
    cfg: SocietyConfig,
    ff1: TemplateSet,
    ff2: TemplateSet | None = None,
    seed: int | None = None,
    backend: Backend | None = None,
) -> RunMetrics:
    """Run ``cfg.iterations`` steps from the initial society; deterministic in the seed."""
    if seed is not None:
        cfg = replace(cfg, seed=int(seed))
    backend = _resolve_backend(backend)
    soc = init_society(cfg, ff1, ff2)
    n, iters = soc.n_agents, cfg.iterations
    draws = RandomStreams(cfg.seed).run_draws(iters, n)
    m_fit = np.zeros(iters)
    m_div = np.zeros(iters, dtype=np.int64)
    m_rcc = np.zeros(iters)
    m_len = np.zeros(iters)
    tr = RunTrace(
        np.zeros((iters, n), dtype=np.int64),
        np.zeros((iters, n), dtype=np.int64),
        np.zeros((iters, n)),
        np.zeros((iters, n), dtype=np.int8),
        np.zeros((iters, n), dtype=np.int8),
    )
    p = cfg.cf_params
    t2 = soc.tables[1] if soc.tables[1] is not None else soc.tables[0]
    s2 = soc.succ[1] if soc.succ[1] is not None else soc.succ[0]
    switch_at = cfg.switch_iteration if cfg.switch_iteration is not None else -1
    common = (
        soc.actions, soc.lengths, soc.fitness, soc.previous, soc.rcc, soc.trend_sum, soc.trend_cnt,
        draws, soc.neighbors, soc.tables[0], t2, soc.succ[0], s2,
        cfg.invention_probability, cfg.chaining_enabled, cfg.cf_enabled,
        p.a, p.b, p.rcc_min, p.rcc_max, switch_at, cfg.rcc_seed_basis == "sub_action",
    )
    outputs = (m_fit, m_div, m_rcc, m_len, tr.fitness, tr.action_length, tr.rcc, tr.adopted, tr.mode)
    if backend == "numba":
        K.simulate_loop(*common, K.DECODE, K.PARTNER, K.SYM_PRESENT, K.MOVE_PRESENT, *outputs)
    else:
        K.simulate_vec(*common, *outputs)
    return RunMetrics(m_fit, m_div, m_rcc, m_len, tr)


# -- text outputs --------------------------------------------------------------


def metrics_csv(m: RunMetrics) -> str:
    buf = io.StringIO()
    buf.write("iteration,mean_fitness,diversity,mean_rcc,mean_action_length\n")
    for t in range(len(m.mean_fitness)):
        buf.write(
            f"{t + 1},{m.mean_fitness[t]:.6f},{int(m.diversity[t])},"
            f"{m.mean_rcc[t]:.6f},{m.mean_action_length[t]:.6f}\n"
        )
    return buf.getvalue()


def trace_csv(m: RunMetrics, run_index: int = 0, header: bool = True) -> str:
    if m.trace is None:
        raise ValueError("run has no trace")
    tr = m.trace
    buf = io.StringIO()
    if header:
        buf.write("run,iteration,agent_id,fitness,action_length,rcc,adopted,mode\n")
    iters, n = tr.fitness.shape
    for t in range(iters):
        for i in range(n):
            mode = "invent" if tr.mode[t, i] == K.MODE_INVENT else "imitate"
            buf.write(
                f"{run_index},{t + 1},{i},{int(tr.fitness[t, i])},{int(tr.action_length[t, i])},"
                f"{tr.rcc[t, i]:.6f},{int(tr.adopted[t, i])},{mode}\n"
            )
    return buf.getvalue()


def action_dump(society: Society) -> str:
    return "".join(f"{i}: {society.action(i)}\n" for i in range(society.n_agents))
