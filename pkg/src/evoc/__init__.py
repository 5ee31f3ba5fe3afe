"""Agent-based simulation of cumulative cultural evolution with chaining and
contextual focus."""

from .domain import (
    Action,
    BodyPart,
    SubAction,
    Template,
    TemplateSet,
    default_template_set,
    load_template_set,
    parse_sub_action,
    parse_template,
    serialize_sub_action,
)
from .society import SocietyConfig, run

__version__ = "0.1.0"

__all__ = [
    "Action",
    "BodyPart",
    "SubAction",
    "Template",
    "TemplateSet",
    "SocietyConfig",
    "default_template_set",
    "load_template_set",
    "parse_sub_action",
    "parse_template",
    "run",
    "serialize_sub_action",
]
