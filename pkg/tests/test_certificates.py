import numpy as np
import pytest

from uqcbounds.errors import UnknownTaskError
from uqcbounds.linalg import haar_unitary
from uqcbounds.sdp import refined_bound, verify_certificate
from uqcbounds.sdp.certificates import closed_form_value, so_free_terms
from uqcbounds.tasks import Task

TASKS = ["inversion", "transposition", "conjugation", Task("iteration", 1), Task("iteration", 3),
         "so_inversion", "diag_inversion"]


@pytest.mark.parametrize("task", TASKS, ids=str)
@pytest.mark.parametrize("d", [2, 3, 4, 5])
def test_certificates_verify(task, d):
    cert = verify_certificate(task, d)
    assert cert.valid, cert.summary()
    assert cert.claimed_value == closed_form_value(task, d)
    assert cert.primal_min_eig >= -1e-10
    assert abs(cert.primal_value - cert.dual_value) <= 1e-8


@pytest.mark.parametrize("task", ["conjugation", Task("iteration", 2), Task("iteration", 4)], ids=str)
@pytest.mark.parametrize("d", [2, 3, 4])
def test_certificates_at_haar_base_point(task, d):
    assert verify_certificate(task, d, haar_unitary(d, seed=d + 30)).valid


def test_conjugation_d5():
    cert = verify_certificate("conjugation", 5)
    assert cert.claimed_value == 4 and cert.primal_feasible and cert.dual_feasible and cert.values_match


def test_so_inversion_d2_parameters():
    cert = verify_certificate("so_inversion", 2)
    assert cert.claimed_value == 1
    assert cert.parameters["a"] == 0 and cert.parameters["b"] == 0.5


def test_so_free_terms_are_traceless_pairs():
    for B, Bp in so_free_terms(4):
        assert abs(np.trace(B)) <= 1e-12 and abs(np.trace(Bp)) <= 1e-12
        assert np.allclose(B, B.T)


def test_iteration_with_diagonal_phases():
    rng = np.random.default_rng(2)
    ph = rng.uniform(-np.pi, np.pi, 3)
    ph -= ph.mean()
    U0 = np.diag(np.exp(1j * ph))
    cert = verify_certificate(Task("iteration", 4), 3, U0)
    assert cert.claimed_value == 4 and cert.valid
    assert np.allclose(cert.primal_point, 4 / 3 * np.eye(3))


def test_smaller_beta_is_infeasible():
    from uqcbounds.derivative import task_choi
    from uqcbounds.linalg import min_eigenvalue

    cert = verify_certificate("transposition", 3)
    J = task_choi("transposition", 3).matrix
    assert min_eigenvalue(J + np.kron(0.99 * cert.primal_point, np.eye(3))) < -1e-3


def test_unknown_task():
    with pytest.raises(UnknownTaskError):
        verify_certificate("rotation", 3)


def test_refined_bounds():
    assert refined_bound("inversion", 3).value == 9
    assert refined_bound("transposition", 2).value == 4
    assert refined_bound("conjugation", 7).value == 6
    r = refined_bound("transposition", 4)
    assert r.value == 7 and abs(r.intermediate - (7 - 4 / 6)) < 1e-12
    assert r.intermediate > 4 + 2
    assert refined_bound(Task("iteration", 2), 3) is None
    assert "not an SDP output" in refined_bound("inversion", 2).provenance
