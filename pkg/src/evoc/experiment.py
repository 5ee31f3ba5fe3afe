"""Batch experiments: many seeded runs per condition, aggregated curves, and
CSV/SVG/summary outputs."""

from __future__ import annotations

import configparser
import enum
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .agent import CfParams
from .charts import line_chart
from .domain import DATA_DIR, TemplateSet, load_template_set
from .rng import derive_seed
from .society import ConfigError, SocietyConfig, run


class Condition(enum.IntEnum):
    NEITHER = 0
    CHAINING_ONLY = 1
    CF_ONLY = 2
    CHAINING_AND_CF = 3

    @property
    def chaining(self) -> bool:
        return self in (Condition.CHAINING_ONLY, Condition.CHAINING_AND_CF)

    @property
    def cf(self) -> bool:
        return self in (Condition.CF_ONLY, Condition.CHAINING_AND_CF)

    @property
    def slug(self) -> str:
        return self.name.lower()

    @classmethod
    def parse(cls, text: str) -> Condition:
        key = text.strip().upper().replace("-", "_")
        try:
            return cls[key]
        except KeyError:
            raise ConfigError(f"unknown condition {text!r}") from None


# also the fixed series order in charts
DEFAULT_CONDITIONS = (
    Condition.NEITHER,
    Condition.CHAINING_ONLY,
    Condition.CHAINING_AND_CF,
    Condition.CF_ONLY,
)


@dataclass(frozen=True)
class ExperimentConfig:
    base: SocietyConfig = field(default_factory=SocietyConfig)
    runs: int = 500
    conditions: tuple[Condition, ...] = DEFAULT_CONDITIONS
    template_set_paths: tuple[Path, Path] = (DATA_DIR / "ff1.txt", DATA_DIR / "ff2.txt")
    output_directory: Path = Path("evoc-out")
    base_seed: int = 0
    workers: int = 1

    def violations(self) -> list[str]:
        out = list(self.base.violations())
        if self.runs < 1:
            out.append(f"runs must be at least 1, got {self.runs}")
        if not self.conditions:
            out.append("conditions must not be empty")
        if len(set(self.conditions)) != len(self.conditions):
            out.append("conditions must not repeat")
        if self.workers < 1:
            out.append(f"workers must be at least 1, got {self.workers}")
        if not 0 <= self.base_seed < 2**64:
            out.append(f"base_seed must be a 64-bit unsigned integer, got {self.base_seed}")
        return out

    def validate(self) -> None:
        problems = self.violations()
        if problems:
            raise ConfigError("invalid configuration: " + "; ".join(problems))

    def condition_config(self, c: Condition) -> SocietyConfig:
        return replace(self.base, chaining_enabled=c.chaining, cf_enabled=c.cf)


# -- configuration file --------------------------------------------------------

_BOOL = {"1": True, "true": True, "yes": True, "on": True, "0": False, "false": False, "no": False, "off": False}


def _parse_bool(key: str, value: str) -> bool:
    try:
        return _BOOL[value.strip().lower()]
    except KeyError:
        raise ConfigError(f"{key}: expected a boolean, got {value!r}") from None


def parse_grid(text: str) -> tuple[int, int]:
    try:
        w, h = text.lower().split("x")
        return int(w), int(h)
    except ValueError:
        raise ConfigError(f"grid must look like WxH, got {text!r}") from None


_SOCIETY_KEYS = {
    "grid", "grid_width", "grid_height", "neighborhood", "invention_probability", "iterations",
    "switch_iteration", "max_action_length", "order_mode", "rcc_seed_basis", "seed",
    "chaining", "cf",
}
_CF_KEYS = {"a", "b", "rcc_min", "rcc_max"}
_EXPERIMENT_KEYS = {"runs", "conditions", "base_seed", "output_directory", "workers"}
_TEMPLATE_KEYS = {"ff1", "ff2"}
_SECTIONS = {"society": _SOCIETY_KEYS, "cf": _CF_KEYS, "experiment": _EXPERIMENT_KEYS, "templates": _TEMPLATE_KEYS}


def parse_config(
    text: str,
    base_dir: Path = Path("."),
    source: str = "<string>",
    defaults: ExperimentConfig | None = None,
) -> ExperimentConfig:
    """Build an :class:`ExperimentConfig` from INI text.

    Sections ``[society]``, ``[cf]``, ``[experiment]`` and ``[templates]``; every
    key is optional and missing keys keep the values in ``defaults``. Relative
    template and output paths resolve against ``base_dir``.
    """
    defaults = defaults or ExperimentConfig()
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    for section in cp.sections():
        if section not in _SECTIONS:
            raise ConfigError(f"{source}: unknown section [{section}]")
        unknown = set(cp[section]) - _SECTIONS[section]
        if unknown:
            raise ConfigError(f"{source}: unknown key(s) in [{section}]: {', '.join(sorted(unknown))}")

    soc = cp["society"] if cp.has_section("society") else {}
    base = defaults.base
    kw: dict = {}
    try:
        if "grid" in soc:
            kw["grid_width"], kw["grid_height"] = parse_grid(soc["grid"])
        for key in ("grid_width", "grid_height", "iterations", "max_action_length", "seed"):
            if key in soc:
                kw[key] = int(soc[key])
        if "invention_probability" in soc:
            kw["invention_probability"] = float(soc["invention_probability"])
        if "switch_iteration" in soc:
            v = soc["switch_iteration"].strip().lower()
            kw["switch_iteration"] = None if v in ("", "none", "off") else int(v)
        for key in ("neighborhood", "order_mode", "rcc_seed_basis"):
            if key in soc:
                kw[key] = soc[key].strip().lower()
        if "chaining" in soc:
            kw["chaining_enabled"] = _parse_bool("chaining", soc["chaining"])
        if "cf" in soc:
            kw["cf_enabled"] = _parse_bool("cf", soc["cf"])
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"{source}: [society] {exc}") from exc
    if cp.has_section("cf"):
        try:
            cf_kw = {k: float(v) for k, v in cp["cf"].items()}
            kw["cf_params"] = replace(base.cf_params, **cf_kw)
        except ValueError as exc:
            raise ConfigError(f"{source}: [cf] {exc}") from exc
    base = replace(base, **kw)

    exp: dict = {"base": base}
    sec = cp["experiment"] if cp.has_section("experiment") else {}
    try:
        if "runs" in sec:
            exp["runs"] = int(sec["runs"])
        if "workers" in sec:
            exp["workers"] = int(sec["workers"])
        if "base_seed" in sec:
            exp["base_seed"] = int(sec["base_seed"])
    except ValueError as exc:
        raise ConfigError(f"{source}: [experiment] {exc}") from exc
    if "conditions" in sec:
        names = [c for c in sec["conditions"].replace("\n", ",").split(",") if c.strip()]
        exp["conditions"] = tuple(Condition.parse(c) for c in names)
    if "output_directory" in sec:
        exp["output_directory"] = base_dir / sec["output_directory"].strip()
    if cp.has_section("templates"):
        t = cp["templates"]
        default = defaults.template_set_paths
        exp["template_set_paths"] = (
            base_dir / t["ff1"].strip() if "ff1" in t else default[0],
            base_dir / t["ff2"].strip() if "ff2" in t else default[1],
        )
    return replace(defaults, **exp)


def load_config(path: str | Path, defaults: ExperimentConfig | None = None) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, base_dir=path.parent, source=str(path), defaults=defaults)


def load_template_sets(cfg: ExperimentConfig) -> tuple[TemplateSet, TemplateSet]:
    ff1 = load_template_set(cfg.template_set_paths[0])
    ff2 = load_template_set(cfg.template_set_paths[1])
    if ff1.id == ff2.id:
        raise ConfigError(f"template sets must differ, both have id {ff1.id!r}")
    return ff1, ff2


# -- batch execution -----------------------------------------------------------


def _exact_mean(cols: np.ndarray) -> np.ndarray:
    """Column means with exactly rounded sums (independent of run order)."""
    n = cols.shape[0]
    return np.array([math.fsum(cols[:, t].tolist()) / n for t in range(cols.shape[1])])


def _standard_error(cols: np.ndarray, mean: np.ndarray) -> np.ndarray:
    n = cols.shape[0]
    if n < 2:
        return np.zeros(cols.shape[1])
    out = np.empty(cols.shape[1])
    for t in range(cols.shape[1]):
        ss = math.fsum(((cols[:, t] - mean[t]) ** 2).tolist())
        out[t] = math.sqrt(ss / (n - 1) / n)
    return out


@dataclass(frozen=True)
class ConditionAggregate:
    condition: Condition
    mean_fitness: np.ndarray
    se_fitness: np.ndarray
    mean_diversity: np.ndarray
    se_diversity: np.ndarray
    run_fitness: np.ndarray  # (runs, iterations)
    run_diversity: np.ndarray

    @property
    def runs(self) -> int:
        return int(self.run_fitness.shape[0])

    @classmethod
    def from_runs(cls, c: Condition, fitness: np.ndarray, div: np.ndarray) -> ConditionAggregate:
        mf = _exact_mean(fitness)
        md = _exact_mean(div.astype(np.float64))
        return cls(c, mf, _standard_error(fitness, mf), md, _standard_error(div.astype(np.float64), md), fitness, div)


@dataclass(frozen=True)
class AggregateMetrics:
    conditions: dict[Condition, ConditionAggregate]
    iterations: int
    switch_iteration: int | None

    def __getitem__(self, c: Condition) -> ConditionAggregate:
        return self.conditions[c]


def _run_one(args) -> tuple[np.ndarray, np.ndarray]:
    cfg, ff1, ff2, seed = args
    m = run(cfg, ff1, ff2, seed=seed)
    return m.mean_fitness, m.diversity


def run_seed(base_seed: int, condition: Condition, run_index: int) -> int:
    return derive_seed(base_seed, int(condition), run_index)


def run_batch(
    cfg: ExperimentConfig,
    template_sets: tuple[TemplateSet, TemplateSet] | None = None,
    workers: int | None = None,
) -> AggregateMetrics:
    """Execute ``cfg.runs`` runs for every condition and aggregate them."""
    cfg.validate()
    ff1, ff2 = template_sets if template_sets is not None else load_template_sets(cfg)
    workers = workers or cfg.workers
    jobs = []
    for c in cfg.conditions:
        scfg = cfg.condition_config(c)
        jobs.extend((scfg, ff1, ff2, run_seed(cfg.base_seed, c, r)) for r in range(cfg.runs))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_one, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        results = [_run_one(j) for j in jobs]
    out = {}
    for k, c in enumerate(cfg.conditions):
        chunk = results[k * cfg.runs:(k + 1) * cfg.runs]
        fit = np.stack([r[0] for r in chunk])
        div = np.stack([r[1] for r in chunk])
        out[c] = ConditionAggregate.from_runs(c, fit, div)
    return AggregateMetrics(out, cfg.base.iterations, cfg.base.switch_iteration)


# -- statistics ----------------------------------------------------------------


def series_at(series: np.ndarray, iteration: int) -> float:
    """Value at a 1-based iteration number."""
    return float(series[iteration - 1])


def recovery_statistic(
    agg: AggregateMetrics, condition: Condition, q: float = 0.9
) -> int | None:
    """Iterations after the switch until mean fitness regains ``q`` of its
    pre-switch level; ``None`` if it never does within the run."""
    if agg.switch_iteration is None:
        raise ValueError("recovery needs a switch iteration")
    if not 0 < q <= 1:
        raise ValueError(f"q must lie in (0, 1], got {q}")
    return recovery_from_series(agg[condition].mean_fitness, agg.switch_iteration, q)


def recovery_from_series(mean_fitness: Sequence[float], switch: int, q: float = 0.9) -> int | None:
    f = np.asarray(mean_fitness)
    target = q * series_at(f, switch - 1)
    for k in range(0, len(f) - switch + 1):
        if series_at(f, switch + k) >= target:
            return k
    return None


def ls_slope(y: Sequence[float], x: Sequence[float]) -> float:
    """Least-squares slope of ``y`` on ``x``."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    xc = x - x.mean()
    return float((xc * (y - y.mean())).sum() / (xc * xc).sum())


def window_slope(series: Sequence[float], first: int, last: int) -> float:
    """Slope over 1-based iterations ``first..last`` inclusive."""
    s = np.asarray(series)
    return ls_slope(s[first - 1:last], np.arange(first, last + 1))


def peak_iteration(series: Sequence[float]) -> int:
    return int(np.argmax(np.asarray(series))) + 1


# -- outputs -------------------------------------------------------------------


def aggregate_csv(a: ConditionAggregate) -> str:
    buf = io.StringIO()
    buf.write("iteration,mean_fitness,se_fitness,mean_diversity,se_diversity\n")
    for t in range(len(a.mean_fitness)):
        buf.write(
            f"{t + 1},{a.mean_fitness[t]:.6f},{a.se_fitness[t]:.6f},"
            f"{a.mean_diversity[t]:.6f},{a.se_diversity[t]:.6f}\n"
        )
    return buf.getvalue()


def read_aggregate_csv(path: str | Path) -> dict[str, np.ndarray]:
    data = np.genfromtxt(path, delimiter=",", names=True, dtype=np.float64)
    data = np.atleast_1d(data)
    return {name: np.asarray(data[name]) for name in data.dtype.names}


def summary_text(agg: AggregateMetrics) -> str:
    lines = []
    window = min(20, agg.iterations)
    first = agg.iterations - window + 1
    for c, a in agg.conditions.items():
        slope = window_slope(a.mean_fitness, first, agg.iterations) if window > 1 else 0.0
        if agg.switch_iteration is not None:
            rec = recovery_statistic(agg, c, 0.9)
            rec_s = "undefined" if rec is None else str(rec)
        else:
            rec_s = "undefined"
        lines += [
            f"[{c.name}]",
            f"condition = {c.name}",
            f"runs = {a.runs}",
            f"plateau_slope_last20 = {slope:.6f}",
            f"recovery_iters_q90 = {rec_s}",
            f"peak_diversity_iter = {peak_iteration(a.mean_diversity)}",
            "",
        ]
    return "\n".join(lines)


def charts(
    curves: dict[str, dict[str, np.ndarray]], iterations: Sequence[float], switch: int | None
) -> dict[str, str]:
    """SVG text per metric, keyed by file name."""
    fit = {name: c["mean_fitness"] for name, c in curves.items()}
    div = {name: c["mean_diversity"] for name, c in curves.items()}
    return {
        "mean_fitness.svg": line_chart(fit, iterations, "Mean fitness of actions", "mean fitness", marker_x=switch),
        "diversity.svg": line_chart(div, iterations, "Diversity of actions", "distinct actions", marker_x=switch),
    }


def _as_written(values: np.ndarray) -> np.ndarray:
    return np.array([float(f"{v:.6f}") for v in values])


def write_outputs(agg: AggregateMetrics, cfg: ExperimentConfig, raw: bool = False) -> list[Path]:
    """Write per-condition CSVs, two SVG charts and ``summary.txt``."""
    out_dir = Path(cfg.output_directory)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out_dir}: {exc}") from exc
    written: list[Path] = []

    def put(path: Path, text: str) -> None:
        try:
            path.write_text(text, encoding="utf-8", newline="\n")
        except OSError as exc:
            raise OSError(f"cannot write {path}: {exc}") from exc
        written.append(path)

    curves = {}
    for c in sorted(agg.conditions, key=DEFAULT_CONDITIONS.index):
        a = agg.conditions[c]
        put(out_dir / f"{c.slug}.csv", aggregate_csv(a))
        # chart the values as written, so replotting from the CSVs is byte-identical
        curves[c.name] = {
            "mean_fitness": _as_written(a.mean_fitness),
            "mean_diversity": _as_written(a.mean_diversity),
        }
    for name, svg in charts(curves, np.arange(1, agg.iterations + 1), agg.switch_iteration).items():
        put(out_dir / name, svg)
    put(out_dir / "summary.txt", summary_text(agg))
    if raw:
        run_dir = out_dir / "runs"
        run_dir.mkdir(exist_ok=True)
        for c, a in agg.conditions.items():
            buf = io.StringIO()
            buf.write("run,iteration,mean_fitness,diversity\n")
            for r in range(a.runs):
                for t in range(agg.iterations):
                    buf.write(f"{r},{t + 1},{float(a.run_fitness[r, t])!r},{int(a.run_diversity[r, t])}\n")
            put(run_dir / f"{c.slug}.csv", buf.getvalue())
    return written


def replot(in_dir: str | Path, out_dir: str | Path | None = None, switch: int | None = None) -> list[Path]:
    """Regenerate the SVG charts from aggregate CSVs already on disk."""
    in_dir = Path(in_dir)
    out_dir = Path(out_dir) if out_dir is not None else in_dir
    curves = {}
    iterations = None
    for c in DEFAULT_CONDITIONS:
        path = in_dir / f"{c.slug}.csv"
        if path.exists():
            data = read_aggregate_csv(path)
            curves[c.name] = data
            iterations = data["iteration"]
    if not curves:
        raise FileNotFoundError(f"no aggregate CSVs found in {in_dir}")
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name, svg in charts(curves, iterations, switch).items():
        p = out_dir / name
        p.write_text(svg, encoding="utf-8", newline="\n")
        written.append(p)
    return written
