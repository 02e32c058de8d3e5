import numpy as np
import pytest
from scipy import sparse
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from conftest import TOY
from rolemine import RoleMiner
from rolemine.datasets import make_rbac_instance


def toy_dense():
    X = np.zeros((5, 5), dtype=int)
    for u, ps in TOY.items():
        for p in ps:
            X[int(u[1:]), int(p[1:])] = 1
    return X


def test_fit_toy():
    X = toy_dense()
    est = RoleMiner().fit(X)
    assert est.n_roles_ == 4
    assert est.user_assignment_.shape == (5, 4)
    assert est.permission_assignment_.shape == (4, 5)
    assert np.array_equal(est.inverse_transform(est.user_assignment_), X.astype(bool))
    assert est.report_.roles_total == 4


def test_transform_assigns_held_roles():
    X = toy_dense()
    est = RoleMiner().fit(X)
    U = est.transform(X)
    assert U.dtype == bool and U.shape == (5, 4)
    assert np.all(U >= est.user_assignment_)
    # every assigned role only grants what the user already has
    assert np.all(est.inverse_transform(U) <= X.astype(bool))
    assert np.array_equal(est.inverse_transform(U), X.astype(bool))
    assert np.array_equal(est.fit_transform(X), est.user_assignment_)


def test_sparse_and_boolean_input():
    X = toy_dense()
    a = RoleMiner().fit(sparse.csr_matrix(X))
    b = RoleMiner().fit(X.astype(bool))
    assert a.n_roles_ == b.n_roles_ == 4


def test_zero_rows_and_columns_are_kept_in_shape():
    X = np.zeros((6, 7), dtype=int)
    X[:5, :5] = toy_dense()
    est = RoleMiner().fit(X)
    assert est.user_assignment_.shape == (6, 4)
    assert not est.user_assignment_[5].any()
    assert np.array_equal(est.inverse_transform(est.user_assignment_), X.astype(bool))


@pytest.mark.parametrize("mode", ["heuristic", "hard", "bnp"])
def test_other_modes_reconstruct(mode):
    g, _ = make_rbac_instance(20, 15, 5, seed=2)
    X = g.to_dense()
    est = RoleMiner(mode=mode, seed=1).fit(X)
    assert np.array_equal(est.inverse_transform(est.user_assignment_), X)


def test_rejects_bad_input():
    with pytest.raises(ValueError):
        RoleMiner().fit(np.array([[0, 2], [1, 0]]))
    with pytest.raises(ValueError):
        RoleMiner().fit(np.zeros((3, 3)))
    with pytest.raises(ValueError):
        RoleMiner().fit(np.array([[1.0, np.nan]]))
    with pytest.raises(ValueError):
        RoleMiner(mode="nope").fit(toy_dense())


def test_not_fitted_and_shape_checks():
    with pytest.raises(NotFittedError):
        RoleMiner().transform(toy_dense())
    est = RoleMiner().fit(toy_dense())
    with pytest.raises(ValueError):
        est.transform(np.ones((2, 3)))
    with pytest.raises(ValueError):
        est.inverse_transform(np.ones((2, 3)))


def test_params_round_trip():
    est = RoleMiner(mode="heuristic", seed=4, strategy="largest")
    params = est.get_params()
    assert params["mode"] == "heuristic" and params["seed"] == 4
    c = clone(est).set_params(seed=9)
    assert c.seed == 9 and c.mode == "heuristic"
