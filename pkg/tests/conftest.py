from __future__ import annotations

import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", deadline=None, max_examples=100,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

from probeplan.core import ObjectRecord, PhysicalProperty as P  # noqa: E402

# one name per property letter, used to build objects from letter strings
LETTER_NAMES = {
    "R": ("white_3D_cuboid", P.RIGID),
    "B": ("black_1D_line", P.BENDABLE),
    "F": ("yellow_2D_rectangle", P.FOLDABLE),
    "C": ("yellow_3D_cuboid", P.COMPRESSIBLE),
    "P": ("red_3D_cuboid", P.PLASTIC),
}


def objects_from_letters(props: str) -> list[ObjectRecord]:
    """Objects with distinct names (suffixes from 2) and known properties."""
    return [ObjectRecord.from_name(i, f"{LETTER_NAMES[p][0]}_{i + 2}", LETTER_NAMES[p][1]) for i, p in enumerate(props)]


@pytest.fixture
def scenes_dir() -> Path:
    from probeplan.catalog import data_path

    return data_path("scenes")


# acceptance criteria record (number, title, passed, seconds, detail) here
ACCEPTANCE: list[tuple[int, str, bool, float, str]] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num, title, ok, secs, detail in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"criterion {num} {'PASS' if ok else 'FAIL'} ({secs:.2f}s) {title}: {detail}")
