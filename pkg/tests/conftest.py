import numpy as np
import pytest
from hypothesis import settings

from swarmsim.model import FAST, SLOW, SimConfig, Swarm, TargetState

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


def make_swarm(positions, velocities=None, a_R=1.5, v_max=1.0, t=0) -> Swarm:
    pos = np.asarray(positions, dtype=float)
    n = len(pos)
    vel = np.zeros((n, 2)) if velocities is None else np.asarray(velocities, dtype=float)
    return Swarm(
        positions=pos,
        velocities=vel,
        a_R=np.full(n, a_R, dtype=float) if np.isscalar(a_R) else np.asarray(a_R, dtype=float),
        class_idx=np.zeros(n, dtype=np.intp),
        v_max=np.full(n, v_max, dtype=float) if np.isscalar(v_max) else np.asarray(v_max, dtype=float),
        t=t,
    )


def make_target(position=(50.0, 50.0), heading=(1.0, 0.0), speed=3.0, radius=5.0, hold=100) -> TargetState:
    return TargetState(
        position=np.asarray(position, dtype=float),
        heading=np.asarray(heading, dtype=float),
        speed=speed,
        radius=radius,
        heading_hold=hold,
    )


def small_config(**changes) -> SimConfig:
    n = changes.pop("N", 12)
    n_fast = changes.pop("n_fast", n // 3)
    base = SimConfig(N=n, k=min(5, n - 1), composition=((FAST, n_fast), (SLOW, n - n_fast)), T_f=200)
    return base.replace(**changes)


@pytest.fixture
def tmp_cwd(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import REPORT
    except ImportError:
        return
    if REPORT:
        terminalreporter.section("acceptance criteria")
        for line in REPORT:
            terminalreporter.write_line(line)
