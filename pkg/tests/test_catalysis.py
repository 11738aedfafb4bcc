import numpy as np
import pytest

from uqcbounds import dsl
from uqcbounds.catalysis import catalysis_verdict, power_map_choi
from uqcbounds.derivative import task_choi
from uqcbounds.errors import BasePointError
from uqcbounds.linalg import haar_unitary, swap
from uqcbounds.sdp import solve_primal
from uqcbounds.tasks import Task


def test_power_map_conjugation():
    J = power_map_choi("conjugation", n=3, d=2).matrix
    assert np.allclose(J, 3 * (-swap(2) + np.eye(4) / 2))


def test_power_map_n1_is_base_choi():
    assert np.allclose(power_map_choi("inversion", n=1, d=3).matrix, task_choi("inversion", 3).matrix)


def test_product_expression_oracle():
    from uqcbounds.derivative import choi, dsl_derivative

    f = dsl.parse("conj * conj * conj", 3)
    J = choi(dsl_derivative(f, d=3)).matrix
    assert np.linalg.norm(J - 3 * task_choi("conjugation", 3).matrix) <= 1e-7


def test_power_map_rejects_bad_base_point():
    with pytest.raises(BasePointError, match="f\\(U0\\) - I"):
        power_map_choi("conjugation", haar_unitary(2, seed=1), n=2)


@pytest.mark.parametrize("task", ["conjugation", "transposition", "inversion"])
@pytest.mark.parametrize("d", [2, 3])
def test_sdp_homogeneity(task, d):
    v = solve_primal(task_choi(task, d).matrix).primal_value
    for n in (2, 3):
        assert abs(solve_primal(power_map_choi(task, n=n, d=d).matrix).primal_value - n * v) <= 1e-5


def test_verdict_examples():
    v = catalysis_verdict("conjugation", 3, known_achievable_N=2)
    assert v.verdict == "catalysis_ruled_out"
    assert [c["n"] for c in v.scaling_check] == [2, 3]
    assert all(abs(c["measured_ratio"] - c["n"]) <= 1e-5 for c in v.scaling_check)
    assert catalysis_verdict(Task("iteration", 2), 2, known_achievable_N=2).verdict == "catalysis_ruled_out"
    v = catalysis_verdict("inversion", 2, known_achievable_N=4)
    assert v.verdict == "inconclusive" and abs(v.sdp_value - 3) <= 1e-5


def test_registry_defaults():
    assert catalysis_verdict("conjugation", 2).verdict == "catalysis_ruled_out"
    v = catalysis_verdict("transposition", 3)
    assert v.known_achievable_N is None and v.verdict == "inconclusive"


def test_verdict_flips_when_known_count_moves():
    assert catalysis_verdict("conjugation", 3, known_achievable_N=2).verdict == "catalysis_ruled_out"
    assert catalysis_verdict("conjugation", 3, known_achievable_N=3).verdict == "inconclusive"


def test_verdict_off_base_point_is_inconclusive():
    v = catalysis_verdict("conjugation", 2, known_achievable_N=1, U0=haar_unitary(2, seed=4))
    assert v.verdict == "inconclusive" and v.base_point_error > 1e-8
    assert "f(U0)" in v.reason


def test_subgroup_task_verdict():
    v = catalysis_verdict("so_inversion", 3, known_achievable_N=2)
    assert abs(v.sdp_value - 2) <= 1e-5
    assert v.verdict == "catalysis_ruled_out"
    assert set(v.to_dict()) >= {"task", "d", "sdp_value", "known_achievable_N", "scaling_check", "verdict"}
