from __future__ import annotations

import json
import pathlib

import pytest

from acsan.frontend.parser import parse_scenario

REPO = pathlib.Path(__file__).resolve().parent.parent
CRO_PATH = REPO / "examples" / "cro.acs"
GOLDEN_DERIVATION = pathlib.Path(__file__).resolve().parent / "data" / "cro_derivation.json"


@pytest.fixture(scope="session")
def cro_text() -> str:
    return CRO_PATH.read_text()


@pytest.fixture(scope="session")
def cro(cro_text):
    scenario, diags = parse_scenario(cro_text)
    assert scenario is not None, [str(d) for d in diags]
    return scenario


@pytest.fixture(scope="session")
def golden_derivation() -> dict:
    return json.loads(GOLDEN_DERIVATION.read_text())


@pytest.fixture(scope="session")
def verdict_schema() -> dict:
    return json.loads(
        (REPO / "src" / "acsan" / "verdict_schema.json").read_text()
    )
