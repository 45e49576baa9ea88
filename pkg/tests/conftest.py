from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from netcode_mp.galois import FieldSpec
from netcode_mp.network import encode, observe

FIXTURES = Path(__file__).parent / "fixtures"

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

SMALL_FIELDS = [FieldSpec(2), FieldSpec(3), FieldSpec(5), FieldSpec(2, 2), FieldSpec(3, 2), FieldSpec(2, 3)]
fields = st.sampled_from(SMALL_FIELDS)


@pytest.fixture
def fixtures() -> Path:
    return FIXTURES


def random_sources(net, rng: np.random.Generator) -> dict[str, tuple[int, ...]]:
    return {s: tuple(int(x) for x in rng.integers(0, net.field.q, net.dim)) for s in net.source_ids}


def observed(net, sink: str, src):
    return observe(net, sink, encode(net, src))


ACCEPTANCE_LINES: dict[int, str] = {}


def record(criterion: int, name: str, ok: bool, detail: str) -> None:
    ACCEPTANCE_LINES[criterion] = f"criterion {criterion} {name}: {'PASS' if ok else 'FAIL'} ({detail})"
    print(ACCEPTANCE_LINES[criterion])


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
