import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from volnmf import datagen, geometry
from volnmf.errors import RankDeficient
from volnmf.geometry import Placement, Verdict

from oracles import grid_projection

finite = st.floats(-5, 5, allow_nan=False, allow_infinity=False)
vectors = st.integers(2, 6).flatmap(lambda n: arrays(np.float64, n, elements=finite))


# projections


def test_projection_feasible_input():
    assert np.allclose(geometry.project_simplex_vector([0.2, 0.3, 0.5]), [0.2, 0.3, 0.5], atol=1e-15)


def test_projection_dominant():
    assert np.array_equal(geometry.project_simplex_vector([2.0, 0.0, 0.0]), [1.0, 0.0, 0.0])


def test_projection_symmetric():
    assert np.allclose(geometry.project_simplex_vector([0.5, 0.5, 0.5]), [1 / 3] * 3, atol=1e-15)


def test_projection_grid_oracle_six():
    v = np.random.default_rng(0).normal(size=6)
    w = geometry.project_simplex_vector(v)
    assert np.linalg.norm(w - grid_projection(v)) <= 2e-3


def test_projection_grid_oracle_batch():
    rng = np.random.default_rng(1)
    for _ in range(200):
        v = rng.normal(scale=rng.uniform(0.1, 3), size=rng.integers(2, 7))
        w = geometry.project_simplex_vector(v)
        assert np.linalg.norm(w - grid_projection(v)) <= 2e-3


@given(vectors)
@settings(max_examples=200, deadline=None)
def test_projection_idempotent(v):
    w = geometry.project_simplex_vector(v)
    assert np.max(np.abs(geometry.project_simplex_vector(w) - w)) <= 1e-12


@given(vectors)
@settings(max_examples=200, deadline=None)
def test_projection_optimality(v):
    # <v - w, z - w> <= 0 for every simplex vertex z characterizes the projection
    w = geometry.project_simplex_vector(v)
    assert np.all(w >= 0)
    assert abs(w.sum() - 1) <= 1e-12
    r = v - w
    assert np.all(r - r @ w <= 1e-12 * max(1.0, np.abs(v).max()))


@given(st.integers(1, 20), st.integers(1, 8), st.integers(0, 2**31))
@settings(max_examples=50, deadline=None)
def test_projection_kernel_matches_numpy(rows, cols, seed):
    v = np.random.default_rng(seed).normal(size=(rows, cols))
    assert np.allclose(geometry.project_simplex_rows(v), geometry.project_simplex_rows_numpy(v), atol=1e-14)


def test_projection_rejects_empty():
    with pytest.raises(ValueError):
        geometry.project_simplex_vector([])


def test_project_constraint_feasible_h_unchanged():
    h = np.random.default_rng(2).dirichlet([1, 1, 1], size=5).T
    out = geometry.project_constraint(h, "H", Placement.H_COLS)
    assert np.allclose(out, h, atol=1e-15)


def test_project_constraint_m_rows():
    out = geometry.project_constraint(np.array([[2.0, 0.0], [0.0, 3.0]]), "M", Placement.M_ROWS)
    assert np.array_equal(out, np.eye(2))


def test_project_constraint_nonneg():
    a = np.random.default_rng(3).normal(size=(4, 5))
    out = geometry.project_constraint(a, "M", Placement.NONNEG)
    assert np.array_equal(out, np.where(a < 0, 0.0, a))


def test_project_constraint_other_factor_only_clips():
    a = np.random.default_rng(4).normal(size=(4, 5))
    out = geometry.project_constraint(a, "M", Placement.H_COLS)
    assert np.array_equal(out, np.maximum(a, 0))


@pytest.mark.parametrize("p", list(Placement))
def test_placement_parse_roundtrip(p):
    assert Placement.parse(p.value) is p
    assert Placement.parse(p.name) is p


# SSC checks


def test_ssc_identity():
    rep = geometry.ssc_check_exact_k3(np.eye(3))
    assert rep.ssc1 is Verdict.HOLDS and rep.ssc2 is Verdict.HOLDS
    assert rep.certificate is None


def test_ssc_positive_rows_violated():
    mt = np.random.default_rng(5).dirichlet([5, 5, 5], size=3)
    rep = geometry.ssc_check_exact_k3(mt)
    assert rep.ssc1 is Verdict.VIOLATED
    y = rep.certificate
    assert np.all(mt @ y >= -1e-10)
    assert y.sum() < np.linalg.norm(y)
    assert geometry.is_ssc1_violation(mt, y)
    assert not geometry.in_dual_soc(y)


def test_ssc_block_holds():
    rep = geometry.ssc_check_exact_k3(datagen.build_ssc_basis_block(3, 0.1))
    assert rep.ssc1 is Verdict.HOLDS


def test_ssc_boundary_case_is_ssc2_violation():
    # at beta = 1/3 the block's dual cone touches the boundary of C* off the axes
    b = 1 / 3
    mt = np.array([(1 - b) * np.eye(3)[i] + b * np.eye(3)[j] for i in range(3) for j in range(3) if i != j])
    rep = geometry.ssc_check_exact_k3(mt)
    assert rep.ssc1 is Verdict.HOLDS
    assert rep.ssc2 is Verdict.VIOLATED
    y = rep.certificate
    assert abs(y.sum() - np.linalg.norm(y)) < 1e-10


def test_ssc_pairwise_sums_violated():
    mt = np.array([[0, 1, 1], [1, 0, 1], [1, 1, 0]], dtype=float)
    rep = geometry.ssc_check_exact_k3(mt)
    assert rep.ssc1 is Verdict.VIOLATED
    assert geometry.is_ssc1_violation(mt, rep.certificate)


def test_ssc_rank_deficient():
    with pytest.raises(RankDeficient):
        geometry.ssc_check_exact_k3(np.ones((4, 3)))


def test_ssc_wrong_width():
    with pytest.raises(ValueError):
        geometry.ssc_check_exact_k3(np.eye(4))


def test_sampling_identity_four():
    rep = geometry.ssc_check_sampling(np.eye(4), 10000, seed=0)
    assert rep.ssc1 is Verdict.PROBABLY_HOLDS
    assert rep.samples_used == 10000


def test_sampling_replicated_mean_row():
    k = 3
    mt = np.full((k, k), 1 / k)
    rep = geometry.ssc_check_sampling(mt, 10000, seed=0)
    assert rep.ssc1 is Verdict.VIOLATED
    assert geometry.is_ssc1_violation(mt, rep.certificate)


def test_sampling_agrees_on_block():
    mt = datagen.build_ssc_basis_block(3, 0.1)
    assert geometry.ssc_check_sampling(mt, 10000, seed=0).ssc1 is Verdict.PROBABLY_HOLDS
    assert geometry.ssc_check_exact_k3(mt).ssc1 is Verdict.HOLDS


def random_instance(rng):
    """Mix of scattered and clustered row sets, so both verdicts occur."""
    if rng.uniform() < 0.5:
        beta = rng.uniform(0, 0.49)
        block = np.array(
            [(1 - beta) * np.eye(3)[i] + beta * np.eye(3)[j] for i in range(3) for j in range(3) if i != j]
        )
        return np.vstack([block, rng.uniform(size=(2, 3))])
    return rng.dirichlet(rng.uniform(0.3, 5, size=3), size=rng.integers(3, 9))


def test_checkers_never_disagree_in_direction():
    rng = np.random.default_rng(6)
    verdicts = set()
    for i in range(50):
        mt = random_instance(rng)
        exact = geometry.ssc_check_exact_k3(mt)
        sampled = geometry.ssc_check_sampling(mt, 10000, seed=i)
        verdicts.add(exact.ssc1)
        if sampled.ssc1 is Verdict.VIOLATED:
            assert exact.ssc1 is Verdict.VIOLATED
            assert geometry.is_ssc1_violation(mt, sampled.certificate)
        if exact.ssc1 is Verdict.VIOLATED:
            assert geometry.is_ssc1_violation(mt, exact.certificate)
    assert verdicts == {Verdict.HOLDS, Verdict.VIOLATED}


def test_extreme_rays_identity_are_axes():
    rays = geometry.extreme_rays_k3(np.eye(3))
    assert sorted(map(tuple, np.round(rays, 12))) == sorted(map(tuple, np.eye(3)))


def test_soc_predicates():
    assert geometry.in_soc(np.ones(3))
    assert not geometry.in_soc(np.array([1.0, 0.0, 0.0]))
    assert geometry.in_dual_soc(np.array([1.0, 0.0, 0.0]))
    assert not geometry.in_dual_soc(np.array([1.0, 1.0, -1.0]))
