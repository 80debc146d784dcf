"""Shared fixtures: the acceptance scenario traces are expensive enough
to build once per session."""

from dataclasses import replace

import pytest

from ssmclab import run
from ssmclab.cli import parse_config

SWEEP_VDC = (150.0, 180.0, 200.0, 250.0, 300.0, 400.0)


@pytest.fixture(scope="session")
def fig_traces():
    """In-memory traces of the four asymmetry presets."""
    return {name: run(parse_config(name))
            for name in ("fig4", "fig5", "fig6", "fig7")}


@pytest.fixture(scope="session")
def sweep_traces():
    """In-memory traces of the precision-region sweep levels."""
    base = parse_config("region_sweep")
    return {v: run(replace(base, vdc0=v)) for v in SWEEP_VDC}
