"""Value types for sub-actions, actions and templates, plus their text forms.

A sub-action assigns one of ``-1`` (down), ``0`` (neutral) or ``1`` (up) to
each of six body parts. The compact text form concatenates the six tokens
with no separator, e.g. ``01-110-1``.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

N_PARTS = 6
N_SUB_ACTIONS = 3**N_PARTS
POSITIONS = (-1, 0, 1)
UNSPECIFIED = None


class BodyPart(enum.IntEnum):
    HEAD = 0
    LEFT_ARM = 1
    RIGHT_ARM = 2
    LEFT_LEG = 3
    RIGHT_LEG = 4
    HIPS = 5

    @property
    def abbrev(self) -> str:
        return _ABBREV[self]


_ABBREV = {
    BodyPart.HEAD: "HD",
    BodyPart.LEFT_ARM: "LA",
    BodyPart.RIGHT_ARM: "RA",
    BodyPart.LEFT_LEG: "LL",
    BodyPart.RIGHT_LEG: "RL",
    BodyPart.HIPS: "HP",
}


class ParseError(ValueError):
    """Malformed compact sub-action or template text."""


class TemplateSetError(ValueError):
    """Template-set document violates the file format or set invariants."""


def _tokenize(text: str, allow_wildcard: bool) -> list[int | None]:
    out: list[int | None] = []
    i = 0
    while i < len(text):
        pos = len(out) + 1
        ch = text[i]
        if ch == "-":
            if i + 1 < len(text) and text[i + 1] == "1":
                out.append(-1)
                i += 2
                continue
            raise ParseError(f"position {pos}: '-' must be followed by '1' in {text!r}")
        if ch == "0":
            out.append(0)
        elif ch == "1":
            out.append(1)
        elif ch == "*" and allow_wildcard:
            out.append(UNSPECIFIED)
        else:
            raise ParseError(f"position {pos}: illegal character {ch!r} in {text!r}")
        i += 1
    if len(out) != N_PARTS:
        raise ParseError(f"expected {N_PARTS} components, got {len(out)} in {text!r}")
    return out


def _token(v: int | None) -> str:
    return "*" if v is None else str(v)


@dataclass(frozen=True, order=True)
class SubAction:
    components: tuple[int, ...]

    def __post_init__(self) -> None:
        comps = tuple(int(c) for c in self.components)
        if len(comps) != N_PARTS:
            raise ValueError(f"sub-action needs {N_PARTS} components, got {len(comps)}")
        if any(c not in POSITIONS for c in comps):
            raise ValueError(f"illegal position in {comps}")
        object.__setattr__(self, "components", comps)

    def __getitem__(self, part: int) -> int:
        return self.components[part]

    def __iter__(self) -> Iterator[int]:
        return iter(self.components)

    def __len__(self) -> int:
        return N_PARTS

    def __str__(self) -> str:
        return serialize_sub_action(self)

    @property
    def code(self) -> int:
        """Base-3 index in ``[0, 729)``; HEAD is the most significant digit."""
        c = 0
        for v in self.components:
            c = c * 3 + (v + 1)
        return c

    @classmethod
    def from_code(cls, code: int) -> SubAction:
        if not 0 <= code < N_SUB_ACTIONS:
            raise ValueError(f"code out of range: {code}")
        return cls(tuple(int(v) for v in DECODE[code]))

    @classmethod
    def neutral(cls) -> SubAction:
        return cls((0,) * N_PARTS)


@dataclass(frozen=True)
class Action:
    sub_actions: tuple[SubAction, ...]

    def __post_init__(self) -> None:
        subs = tuple(self.sub_actions)
        if not subs:
            raise ValueError("an action needs at least one sub-action")
        object.__setattr__(self, "sub_actions", subs)

    def __len__(self) -> int:
        return len(self.sub_actions)

    def __iter__(self) -> Iterator[SubAction]:
        return iter(self.sub_actions)

    @property
    def last(self) -> SubAction:
        return self.sub_actions[-1]

    @property
    def codes(self) -> tuple[int, ...]:
        return tuple(d.code for d in self.sub_actions)

    @classmethod
    def from_codes(cls, codes: Iterable[int]) -> Action:
        return cls(tuple(SubAction.from_code(int(c)) for c in codes))

    def __str__(self) -> str:
        return ";".join(serialize_sub_action(d) for d in self.sub_actions)


@dataclass(frozen=True)
class Template:
    slots: tuple[int | None, ...]

    def __post_init__(self) -> None:
        slots = tuple(None if s is None else int(s) for s in self.slots)
        if len(slots) != N_PARTS:
            raise ValueError(f"template needs {N_PARTS} slots, got {len(slots)}")
        if any(s is not None and s not in POSITIONS for s in slots):
            raise ValueError(f"illegal slot value in {slots}")
        object.__setattr__(self, "slots", slots)

    def __getitem__(self, part: int) -> int | None:
        return self.slots[part]

    def __iter__(self) -> Iterator[int | None]:
        return iter(self.slots)

    def __str__(self) -> str:
        return serialize_template(self)


@dataclass(frozen=True)
class TemplateSet:
    id: str
    templates: tuple[Template, ...]

    def __post_init__(self) -> None:
        temps = tuple(self.templates)
        if not temps:
            raise TemplateSetError("empty set")
        seen: set[Template] = set()
        for t in temps:
            if t in seen:
                raise TemplateSetError(f"duplicate template {serialize_template(t)}")
            seen.add(t)
        object.__setattr__(self, "templates", temps)

    def __len__(self) -> int:
        return len(self.templates)

    def __iter__(self) -> Iterator[Template]:
        return iter(self.templates)


def parse_sub_action(text: str) -> SubAction:
    return SubAction(tuple(_tokenize(text.strip(), allow_wildcard=False)))  # type: ignore[arg-type]


def serialize_sub_action(d: SubAction) -> str:
    return "".join(str(v) for v in d.components)


def parse_template(text: str) -> Template:
    return Template(tuple(_tokenize(text.strip(), allow_wildcard=True)))


def serialize_template(t: Template) -> str:
    return "".join(_token(s) for s in t.slots)


def parse_action(text: str) -> Action:
    """Parse ``;``-separated compact sub-actions, as in the action dump."""
    return Action(tuple(parse_sub_action(p) for p in text.strip().split(";")))


def all_sub_actions() -> list[SubAction]:
    """All 729 sub-actions in code order."""
    return [SubAction(c) for c in itertools.product(POSITIONS, repeat=N_PARTS)]


def parse_template_set(text: str, source: str = "<string>") -> TemplateSet:
    """Parse a template-set document.

    Format: ``#`` starts a comment, blank lines are skipped, the first
    content line is ``id: <name>`` and every following content line is one
    compact template.
    """
    set_id: str | None = None
    templates: list[Template] = []
    seen: dict[Template, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        line = line.strip()
        if set_id is None:
            if not line.startswith("id:"):
                raise TemplateSetError(f"{source}:{lineno}: first line must be 'id: <name>'")
            set_id = line[3:].strip()
            if not set_id:
                raise TemplateSetError(f"{source}:{lineno}: empty id")
            continue
        try:
            t = parse_template(line)
        except ParseError as exc:
            raise TemplateSetError(f"{source}:{lineno}: {exc}") from exc
        if t in seen:
            raise TemplateSetError(
                f"{source}:{lineno}: duplicate template {line} (first on line {seen[t]})"
            )
        seen[t] = lineno
        templates.append(t)
    if set_id is None:
        raise TemplateSetError(f"{source}: missing 'id:' line")
    if not templates:
        raise TemplateSetError(f"{source}: empty set")
    return TemplateSet(set_id, tuple(templates))


def load_template_set(path: str | Path) -> TemplateSet:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise TemplateSetError(f"cannot read template set {path}: {exc}") from exc
    return parse_template_set(text, source=str(path))


def format_template_set(ts: TemplateSet) -> str:
    lines = [f"id: {ts.id}"]
    lines.extend(serialize_template(t) for t in ts.templates)
    return "\n".join(lines) + "\n"


DATA_DIR = Path(__file__).with_name("data")


def default_template_set(name: str) -> TemplateSet:
    """Load a shipped template set (``ff1`` or ``ff2``)."""
    return load_template_set(DATA_DIR / f"{name}.txt")


def templates_as_arrays(ts: TemplateSet | Sequence[Template]) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(values, specified)`` arrays of shape ``(n_templates, 6)``."""
    temps = ts.templates if isinstance(ts, TemplateSet) else tuple(ts)
    values = np.array([[0 if s is None else s for s in t.slots] for t in temps], dtype=np.int8)
    specified = np.array([[s is not None for s in t.slots] for t in temps], dtype=bool)
    return values, specified


def _decode_table() -> np.ndarray:
    table = np.array(list(itertools.product(POSITIONS, repeat=N_PARTS)), dtype=np.int8)
    table.setflags(write=False)
    return table


# row ``c`` holds the components of the sub-action with code ``c``
DECODE = _decode_table()
NEUTRAL_CODE = SubAction.neutral().code
