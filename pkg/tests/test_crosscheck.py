import json
from pathlib import Path

import pytest

from bellrand.guessing import Mode, ProgramSpec, assemble
from bellrand.quantum import behavior_from_model, noise_model
from bellrand.sdp import solve

from crosscheck import INSTANCES, SETTINGS, instance_text, solve_sdpa

FIXTURE = json.loads((Path(__file__).parent / "fixtures" / "cross_solver.json").read_text())


def internal(noise, param, case):
    spec = ProgramSpec(Mode.from_case(case), behavior_from_model(noise_model(noise, param)), SETTINGS)
    return solve(assemble(spec).problem)


def test_fixture_covers_instances():
    assert sorted(FIXTURE) == sorted(f"{n}:{p}:{c}" for n, p, c in INSTANCES)
    assert len(INSTANCES) == 6


@pytest.mark.parametrize("noise, param, case", INSTANCES)
def test_recorded_external_values(noise, param, case):
    report = internal(noise, param, case)
    external = -FIXTURE[f"{noise}:{param}:{case}"]["external_min"]
    assert abs(report.primal_objective - external) <= 1e-5
    assert abs(report.dual_objective - external) <= 1e-5


def test_live_external_solve():
    pytest.importorskip("cvxopt")
    noise, param, case = INSTANCES[1]
    value = -solve_sdpa(instance_text(noise, param, case))
    assert abs(value - internal(noise, param, case).primal_objective) <= 1e-5
