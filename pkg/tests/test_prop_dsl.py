"""Print/parse round trips and unitarity of random expressions."""
import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from uqcbounds import dsl
from uqcbounds.linalg import haar_unitary

leaves = st.one_of(
    st.just(dsl.Identity()),
    st.just(dsl.Inverse()),
    st.just(dsl.Transpose()),
    st.just(dsl.Conjugate()),
    st.integers(-4, 4).filter(lambda k: k != 0).map(dsl.Power),
)
exprs = st.recursive(
    leaves,
    lambda inner: st.one_of(st.builds(dsl.Compose, inner, inner), st.builds(dsl.Product, inner, inner)),
    max_leaves=12,
)


@settings(max_examples=300, deadline=None)
@given(exprs, st.booleans())
def test_print_parse_round_trip(f, ascii):
    assert dsl.parse(dsl.to_text(f, ascii=ascii), 2) == f


@settings(max_examples=200, deadline=None)
@given(exprs, st.integers(2, 4), st.integers(0, 2**32 - 1))
def test_evaluate_is_special_unitary(f, d, seed):
    V = dsl.evaluate(f, haar_unitary(d, seed=seed))
    assert np.abs(V.conj().T @ V - np.eye(d)).max() <= 1e-8
    assert abs(np.linalg.det(V) - 1) <= 1e-8
