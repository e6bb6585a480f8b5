"""Scenario DSL frontend: parser, pretty-printer, and CLI."""

from .parser import (
    Diagnostic,
    ScenarioSource,
    parse_query_text,
    parse_scenario,
)
from .printer import print_rule, print_scenario
from .cli import run_cli

__all__ = [
    "Diagnostic",
    "ScenarioSource",
    "parse_query_text",
    "parse_scenario",
    "print_rule",
    "print_scenario",
    "run_cli",
]
