"""Template-based rugged fitness.

A sub-action earns the order of every template it matches. Chained actions
add their length to the fitness of their final sub-action.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal, Sequence

import numpy as np

from .domain import (
    DECODE,
    Action,
    ParseError,
    SubAction,
    Template,
    TemplateSet,
    all_sub_actions,
    parse_sub_action,
    serialize_sub_action,
    templates_as_arrays,
)

OrderMode = Literal["count", "signed_sum"]


def template_weight(t: Template, d: SubAction) -> int:
    for slot, pos in zip(t.slots, d.components):
        if slot is not None and slot != pos:
            return 0
    return 1


def template_order(t: Template, mode: OrderMode = "count") -> int:
    """Number of specified slots.

    ``mode="signed_sum"`` sums the specified slot values instead, which can be
    negative; it exists only for sensitivity studies.
    """
    if mode == "count":
        return sum(1 for s in t.slots if s is not None)
    if mode == "signed_sum":
        return sum(s for s in t.slots if s is not None)
    raise ValueError(f"unknown order mode {mode!r}")


def sub_action_fitness(d: SubAction, ts: TemplateSet, mode: OrderMode = "count") -> int:
    return sum(template_weight(t, d) * template_order(t, mode) for t in ts.templates)


def successful(d: SubAction, ts: TemplateSet) -> bool:
    return any(template_weight(t, d) for t in ts.templates)


def is_novel(d: SubAction, previous: SubAction) -> bool:
    return d.components != previous.components


class ChainingContractError(ValueError):
    """A multi-sub-action action was scored with chaining disabled."""


def action_fitness(
    a: Action, ts: TemplateSet, chaining_enabled: bool, mode: OrderMode = "count"
) -> int:
    if not chaining_enabled:
        if len(a) != 1:
            raise ChainingContractError(
                f"chaining disabled but action has {len(a)} sub-actions"
            )
        return sub_action_fitness(a.last, ts, mode)
    return sub_action_fitness(a.last, ts, mode) + len(a)


def fitness_table(ts: TemplateSet, mode: OrderMode = "count") -> np.ndarray:
    """Fitness of every sub-action code, shape ``(729,)``, for the kernels."""
    values, specified = templates_as_arrays(ts)
    if mode == "count":
        orders = specified.sum(axis=1)
    elif mode == "signed_sum":
        orders = np.where(specified, values, 0).sum(axis=1)
    else:
        raise ValueError(f"unknown order mode {mode!r}")
    # (729, n_templates): every specified slot agrees
    match = np.all(
        (DECODE[:, None, :] == values[None, :, :]) | ~specified[None, :, :], axis=2
    )
    return (match.astype(np.int64) @ orders.astype(np.int64)).astype(np.int64)


def success_table(ts: TemplateSet) -> np.ndarray:
    values, specified = templates_as_arrays(ts)
    match = np.all(
        (DECODE[:, None, :] == values[None, :, :]) | ~specified[None, :, :], axis=2
    )
    return match.any(axis=1)


@dataclass(frozen=True)
class LandscapeTable:
    template_set_id: str
    entries: dict[SubAction, int]
    argmax: frozenset[SubAction] = field(init=False)

    def __post_init__(self) -> None:
        best = max(self.entries.values())
        object.__setattr__(
            self, "argmax", frozenset(d for d, f in self.entries.items() if f == best)
        )

    @property
    def max_fitness(self) -> int:
        return max(self.entries.values())

    def __getitem__(self, d: SubAction) -> int:
        return self.entries[d]


def enumerate_landscape(ts: TemplateSet) -> LandscapeTable:
    """Brute-force oracle: score all 729 sub-actions from first principles.

    Deliberately shares no helpers with :func:`sub_action_fitness` or
    :func:`fitness_table`.
    """
    entries: dict[SubAction, int] = {}
    for d in all_sub_actions():
        total = 0
        for t in ts.templates:
            matched = True
            order = 0
            for j in range(6):
                slot = t.slots[j]
                if slot is None:
                    continue
                order += 1
                if slot != d.components[j]:
                    matched = False
            if matched:
                total += order
        entries[d] = total
    return LandscapeTable(ts.id, entries)


def landscape_csv(table: LandscapeTable) -> str:
    """CSV ``sub_action,fitness,is_optimal`` sorted by compact string."""
    rows = sorted(
        (serialize_sub_action(d), f, int(d in table.argmax)) for d, f in table.entries.items()
    )
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["sub_action", "fitness", "is_optimal"])
    w.writerows(rows)
    return buf.getvalue()


# -- validation ---------------------------------------------------------------


class ConstraintError(ValueError):
    """Malformed constraint document."""


@dataclass(frozen=True)
class Constraint:
    kind: Literal["fitness", "argmax"]
    expected: object
    hard: bool = True
    sub_action: SubAction | None = None
    label: str = ""


@dataclass(frozen=True)
class ConstraintResult:
    constraint: Constraint
    passed: bool
    observed: object


@dataclass(frozen=True)
class ValidationReport:
    template_set_id: str
    results: tuple[ConstraintResult, ...]

    @property
    def passed(self) -> bool:
        """True iff every hard constraint holds; soft failures are logged only."""
        return all(r.passed for r in self.results if r.constraint.hard)

    def format(self) -> str:
        lines = [f"template set: {self.template_set_id}"]
        for r in self.results:
            c = r.constraint
            status = "PASS" if r.passed else ("FAIL" if c.hard else "MISMATCH (soft)")
            if c.kind == "fitness":
                what = f"F({serialize_sub_action(c.sub_action)})"  # type: ignore[arg-type]
                exp, obs = c.expected, r.observed
            else:
                what = "argmax"
                exp = " ".join(sorted(serialize_sub_action(d) for d in c.expected))  # type: ignore[attr-defined]
                obs = " ".join(sorted(serialize_sub_action(d) for d in r.observed))  # type: ignore[attr-defined]
            label = f" [{c.label}]" if c.label else ""
            lines.append(f"{status:<16} {what} expected={exp} observed={obs}{label}")
        lines.append("overall: " + ("PASS" if self.passed else "FAIL"))
        return "\n".join(lines) + "\n"


def validate_template_set(ts: TemplateSet, constraints: Sequence[Constraint]) -> ValidationReport:
    table = enumerate_landscape(ts)
    results = []
    for c in constraints:
        if c.kind == "fitness":
            observed: object = table[c.sub_action]  # type: ignore[index]
            passed = observed == c.expected
        elif c.kind == "argmax":
            observed = table.argmax
            passed = observed == frozenset(c.expected)  # type: ignore[arg-type]
        else:
            raise ConstraintError(f"unknown constraint kind {c.kind!r}")
        results.append(ConstraintResult(c, passed, observed))
    return ValidationReport(ts.id, tuple(results))


def parse_constraints(text: str, source: str = "<string>") -> list[Constraint]:
    """Parse a constraint document.

    One constraint per line, ``#`` comments allowed::

        fitness 000000 6
        argmax 01-11-11 01-11-1-1
        soft fitness 111110 31   # reported, never fails validation

    An optional trailing ``| label`` annotates the line.
    """
    out: list[Constraint] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        label = ""
        if "|" in line:
            line, label = (p.strip() for p in line.split("|", 1))
        parts = line.split()
        hard = True
        if parts[0] == "soft":
            hard = False
            parts = parts[1:]
        try:
            if parts and parts[0] == "fitness" and len(parts) == 3:
                out.append(
                    Constraint("fitness", int(parts[2]), hard, parse_sub_action(parts[1]), label)
                )
            elif parts and parts[0] == "argmax" and len(parts) >= 2:
                optima = frozenset(parse_sub_action(p) for p in parts[1:])
                out.append(Constraint("argmax", optima, hard, None, label))
            else:
                raise ConstraintError(f"{source}:{lineno}: cannot parse {raw.strip()!r}")
        except (ParseError, ValueError) as exc:
            if isinstance(exc, ConstraintError):
                raise
            raise ConstraintError(f"{source}:{lineno}: {exc}") from exc
    if not out:
        raise ConstraintError(f"{source}: no constraints")
    return out


def load_constraints(path: str | Path) -> list[Constraint]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConstraintError(f"cannot read constraints {path}: {exc}") from exc
    return parse_constraints(text, source=str(path))

