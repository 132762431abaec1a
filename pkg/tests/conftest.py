import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from mindroom.sorts import FunctionDecl, default_signature

REPO_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
SECT7_SCENARIO = os.path.join(REPO_ROOT, "examples", "paper-sect7.scn")


@pytest.fixture(scope="session")
def sig():
    """Default signature plus the constants the tests mention."""
    return (
        default_signature()
        .with_constants(
            {
                "A": "Block",
                "B": "Block",
                "C": "Block",
                "D": "Block",
                "h1": "Agent",
                "h2": "Agent",
                "cir": "Agent",
                "a": "Agent",
                "b": "Agent",
                "pc": "Boolean",
                "qc": "Boolean",
                "e0": "Event",
            }
        )
        .with_functions(
            {
                "P": FunctionDecl("P", (("Object",),), "Boolean"),
                "Q": FunctionDecl("Q", (("Object",),), "Boolean"),
                "R2": FunctionDecl("R2", (("Object",), ("Object",)), "Boolean"),
                "fo": FunctionDecl("fo", (("Object",),), "Object"),
            }
        )
        .with_constants({"c1": "Object", "c2": "Object", "c3": "Object"})
    )


@pytest.fixture(scope="session")
def scenario_path():
    return SECT7_SCENARIO
