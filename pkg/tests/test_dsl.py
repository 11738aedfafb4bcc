import numpy as np
import pytest

from uqcbounds import dsl
from uqcbounds.errors import DimensionError, DslSyntaxError, NotUnitaryError
from uqcbounds.linalg import haar_unitary, save_matrix


def test_parse_primitives():
    assert dsl.parse("inv", 2) == dsl.Inverse()
    assert dsl.parse("  T ", 2) == dsl.Transpose()
    assert dsl.parse("id", 3) == dsl.Identity()
    assert dsl.parse("pow:-2", 2) == dsl.Power(-2)


def test_parse_composition_and_product():
    assert dsl.parse("conj o pow:2", 2) == dsl.Compose(dsl.Conjugate(), dsl.Power(2))
    assert dsl.parse("conj ∘ pow:2", 2) == dsl.Compose(dsl.Conjugate(), dsl.Power(2))
    assert dsl.parse("inv * T", 2) == dsl.Product(dsl.Inverse(), dsl.Transpose())
    assert dsl.parse("(inv*T)o conj", 2) == dsl.Compose(dsl.Product(dsl.Inverse(), dsl.Transpose()),
                                                        dsl.Conjugate())


@pytest.mark.parametrize("text", ["", "inv o", "pow:0", "pow:x", "foo", "(inv", "inv)", "inv inv"])
def test_parse_errors(text):
    with pytest.raises((DslSyntaxError, ValueError)):
        dsl.parse(text, 2)


def test_syntax_error_reports_position():
    with pytest.raises(DslSyntaxError) as info:
        dsl.parse("inv o bogus", 2)
    assert info.value.position == 6


def test_matrix_files(tmp_path):
    V = haar_unitary(2, seed=8)
    save_matrix(tmp_path / "v.json", V)
    f = dsl.parse("sandwich:v.json o inv", 2, base_dir=tmp_path)
    U = haar_unitary(2, seed=2)
    assert np.allclose(dsl.evaluate(f, U), V @ U.conj().T @ V.conj().T)
    with pytest.raises((DimensionError, DslSyntaxError)):
        dsl.parse("lmul:v.json", 3, base_dir=tmp_path)
    save_matrix(tmp_path / "w.json", np.diag([1.0, 1j]))
    with pytest.raises((DslSyntaxError, NotUnitaryError)):
        dsl.parse("rmul:w.json", 2, base_dir=tmp_path)
    with pytest.raises(DslSyntaxError):
        dsl.parse("lmul:missing.json", 2, base_dir=tmp_path)


def test_evaluate_examples():
    U = haar_unitary(3, seed=3)
    assert np.allclose(dsl.evaluate(dsl.parse("inv", 3), U), U.conj().T)
    th = 0.2
    D = np.diag([np.exp(1j * th), np.exp(-1j * th)])
    assert np.allclose(dsl.evaluate(dsl.Power(3), D), np.diag([np.exp(0.6j), np.exp(-0.6j)]))
    assert np.allclose(dsl.evaluate(dsl.parse("conj o inv", 3), U), U.conj().T.conj())
    assert np.allclose(dsl.evaluate(dsl.parse("inv * T", 3), U), U.conj().T @ U.T)


def test_compose_with_identity_is_exact():
    U = haar_unitary(3, seed=4)
    f = dsl.parse("conj o pow:2", 3)
    assert np.array_equal(dsl.evaluate(dsl.Compose(f, dsl.Identity()), U), dsl.evaluate(f, U))


def test_evaluate_preserves_special_unitarity():
    U = haar_unitary(3, seed=6)
    for text in ["inv", "T", "conj", "pow:4", "pow:-3", "inv * T * conj", "T o pow:2 o inv"]:
        V = dsl.evaluate(dsl.parse(text, 3), U)
        assert np.abs(V.conj().T @ V - np.eye(3)).max() <= 1e-8
        assert abs(np.linalg.det(V) - 1) <= 1e-8


def test_evaluate_rejects_non_unitary():
    with pytest.raises(NotUnitaryError):
        dsl.evaluate(dsl.Inverse(), np.diag([1.0, 2.0]))


def test_depth_limit():
    f = dsl.Identity()
    for _ in range(40):
        f = dsl.Compose(dsl.Inverse(), f)
    with pytest.raises(ValueError):
        dsl.evaluate(f, np.eye(2))


def test_power_product():
    f = dsl.power_product(dsl.Inverse(), 3)
    U = haar_unitary(2, seed=1)
    assert np.allclose(dsl.evaluate(f, U), np.linalg.matrix_power(U.conj().T, 3))
    with pytest.raises(ValueError):
        dsl.power_product(dsl.Inverse(), 0)
