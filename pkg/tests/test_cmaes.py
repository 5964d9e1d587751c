import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wracma.cmaes import Box, SearchDistribution, default_pop_size, mirror
from wracma.errors import ContractError, CovarianceError
from wracma.rankstats import ranking_of


def box3(dim=2):
    return Box.cube(dim, -3.0, 3.0)


def test_default_pop_size():
    assert default_pop_size(5) == 8
    assert default_pop_size(20) == 12
    assert default_pop_size(2) == 6


def test_box_validation():
    with pytest.raises(ContractError):
        Box(np.array([0.0, 1.0]), np.array([1.0, 1.0]))
    with pytest.raises(ContractError):
        Box(np.array([[0.0]]), np.array([[1.0]]))


# -- mirror -------------------------------------------------------------------


def test_mirror_single_reflection():
    assert mirror(np.array([4.0]), box3(1))[0] == pytest.approx(2.0)


def test_mirror_double_reflection():
    # -10 -> 4 (about -3... unfolded) -> 2: two reflections by hand
    assert mirror(np.array([-10.0]), box3(1))[0] == pytest.approx(2.0)


def test_mirror_identity_inside():
    v = np.array([-3.0, -1.2, 0.0, 2.9, 3.0])
    assert mirror(v, box3(5)).tolist() == v.tolist()


@given(st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=1, max_size=6))
@settings(max_examples=150, deadline=None)
def test_mirror_idempotent_and_in_box(values):
    v = np.asarray(values)
    box = Box.cube(v.size, -3.0, 3.0)
    m = mirror(v, box)
    assert np.all(m >= -3.0) and np.all(m <= 3.0)
    assert np.allclose(mirror(m, box), m, atol=1e-9)


def test_mirror_batch_rows():
    batch = np.array([[4.0, -10.0], [0.5, 3.5]])
    out = mirror(batch, box3(2))
    assert out == pytest.approx(np.array([[2.0, 2.0], [0.5, 2.5]]))


# -- ask ----------------------------------------------------------------------


def test_ask_deterministic_on_state_copies():
    dist = SearchDistribution([0.0, 0.0], 1.0)
    twin = dist.clone(fresh_adaptation=False)
    a = dist.ask(box3(), np.random.default_rng(42))
    b = twin.ask(box3(), np.random.default_rng(42))
    assert np.array_equal(a, b)


def test_ask_candidates_inside_box():
    dist = SearchDistribution([2.9, -2.9], 2.0)
    rng = np.random.default_rng(0)
    for _ in range(50):
        cand = dist.ask(box3(), rng)
        assert np.all(cand >= -3.0) and np.all(cand <= 3.0)


def test_ask_dimension_mismatch():
    dist = SearchDistribution([0.0, 0.0], 1.0)
    with pytest.raises(ContractError):
        dist.ask(Box.cube(3, -1, 1), np.random.default_rng(0))


def test_ask_unbounded_sampling_matches_law_of_large_numbers():
    dist = SearchDistribution([0.0, 0.0], 1.0, pop_size=10)
    rng = np.random.default_rng(123)
    total = np.zeros(2)
    count = 0
    while count < 100_000:
        cand = dist.ask(None, rng)
        total += cand.sum(axis=0)
        count += cand.shape[0]
    assert np.all(np.abs(total / count) < 0.02)


def test_ask_raises_named_error_on_bad_covariance():
    dist = SearchDistribution([0.0, 0.0], 1.0, label="outer")
    dist.C = np.array([[-1.0, 0.0], [0.0, -2.0]])
    dist._stale = True
    with pytest.raises(CovarianceError, match="outer"):
        dist.ask(box3(), np.random.default_rng(0))


def test_indefinite_covariance_rejected():
    dist = SearchDistribution([0.0, 0.0], 1.0, label="inner[3]")
    dist.C = np.array([[1.0, 2.0], [2.0, 1.0]])  # eigenvalues 3 and -1
    dist._stale = True
    with pytest.raises(CovarianceError, match=r"inner\[3\]"):
        dist.ask(box3(), np.random.default_rng(0))


# -- tell ---------------------------------------------------------------------


def _run_sphere(dim, iterations, seed=1, mean0=3.0, step0=1.5):
    dist = SearchDistribution(np.full(dim, mean0), step0)
    rng = np.random.default_rng(seed)
    for _ in range(iterations):
        cand = dist.ask(None, rng)
        values = np.einsum("ij,ij->i", cand, cand)
        dist.tell(cand, ranking_of(values))
        if float(dist.mean @ dist.mean) < 1e-12:
            break
    return dist


def test_sphere_reaches_1e3_in_2000_tells():
    dist = _run_sphere(5, 2000)
    assert np.linalg.norm(dist.mean) <= 1e-3


@pytest.mark.parametrize("dim", [2, 5, 10])
def test_sphere_convergence_oracle(dim):
    dist = _run_sphere(dim, 10_000)
    assert np.linalg.norm(dist.mean) <= 1e-6


def test_tell_increments_iteration_once():
    dist = SearchDistribution([0.0, 0.0], 1.0)
    rng = np.random.default_rng(0)
    cand = dist.ask(box3(), rng)
    assert dist.iteration == 0
    dist.tell(cand, ranking_of(cand[:, 0]))
    assert dist.iteration == 1


def test_tell_requires_pending_ask():
    dist = SearchDistribution([0.0, 0.0], 1.0)
    with pytest.raises(ContractError):
        dist.tell(np.zeros((dist.pop_size, 2)), list(range(1, dist.pop_size + 1)))


def test_tell_rejects_non_permutation():
    dist = SearchDistribution([0.0, 0.0], 1.0)
    cand = dist.ask(box3(), np.random.default_rng(0))
    ranks = np.ones(dist.pop_size, dtype=int)
    with pytest.raises(ContractError):
        dist.tell(cand, ranks)


def test_tell_rejects_foreign_candidates():
    dist = SearchDistribution([0.0, 0.0], 1.0)
    cand = dist.ask(box3(), np.random.default_rng(0))
    with pytest.raises(ContractError):
        dist.tell(cand + 1.0, ranking_of(cand[:, 0]))


def test_rank_only_dependence():
    """Order-preserving transforms of the objective leave the update identical."""
    seeds = np.random.default_rng(7).integers(0, 2**31, size=40)
    a = SearchDistribution(np.full(4, 2.0), 1.2)
    b = a.clone(fresh_adaptation=False)
    for s in seeds:
        ca = a.ask(box3(4), np.random.default_rng(s))
        cb = b.ask(box3(4), np.random.default_rng(s))
        values = np.einsum("ij,ij->i", ca, ca)
        a.tell(ca, ranking_of(values))
        b.tell(cb, ranking_of(np.log1p(values) * 5.0 - 2.0))
        assert np.array_equal(a.mean, b.mean)
        assert np.array_equal(a.C, b.C)
        assert a.sigma == b.sigma


def test_trajectory_determinism_bit_identical():
    def run():
        dist = SearchDistribution(np.full(3, 1.0), 0.7, pop_size=7)
        rng = np.random.default_rng(99)
        trace = []
        for _ in range(60):
            cand = dist.ask(box3(3), rng)
            dist.tell(cand, ranking_of(np.abs(cand).sum(axis=1)))
            trace.append((dist.mean.copy(), dist.covariance, dist.sigma))
        return trace

    for (m1, c1, s1), (m2, c2, s2) in zip(run(), run()):
        assert np.array_equal(m1, m2) and np.array_equal(c1, c2) and s1 == s2


def test_covariance_stays_positive_definite():
    dist = SearchDistribution(np.full(4, 2.5), 1.5)
    rng = np.random.default_rng(11)
    for _ in range(300):
        cand = dist.ask(box3(4), rng)
        dist.tell(cand, ranking_of(np.einsum("ij,ij->i", cand, cand)))
        np.linalg.cholesky(dist.covariance)  # raises if not SPD


# -- cap_std ------------------------------------------------------------------


def test_cap_std_noop_below_bound():
    dist = SearchDistribution([0.0, 0.0], 1.0)
    before = dist.covariance
    dist.cap_std(box3())
    assert np.array_equal(dist.covariance, before)


def test_cap_std_rescales_to_half_width():
    dist = SearchDistribution([0.0, 0.0], 1.0)
    dist.C = np.diag([100.0, 1.0])
    dist._stale = True
    dist.cap_std(box3())
    assert dist.covariance == pytest.approx(np.diag([9.0, 1.0]), rel=1e-12)


def test_cap_std_preserves_spd_and_off_diagonals():
    dist = SearchDistribution([0.0, 0.0, 0.0], 1.0)
    dist.C = np.array([[25.0, 2.0, 0.5], [2.0, 1.0, 0.1], [0.5, 0.1, 0.25]])
    dist._stale = True
    dist.cap_std(Box.cube(3, -3.0, 3.0))
    cov = dist.covariance
    np.linalg.cholesky(cov)
    # capped coordinate hits the bound, the others keep their marginals
    assert np.sqrt(cov[0, 0]) == pytest.approx(3.0)
    assert np.sqrt(cov[1, 1]) == pytest.approx(1.0)
    assert np.sqrt(cov[2, 2]) == pytest.approx(0.5)


def test_configured_cap_fraction():
    dist = SearchDistribution([0.0, 0.0], 1.0, std_cap_fraction=0.25)
    dist.C = np.diag([100.0, 1.0])
    dist._stale = True
    dist.cap_std(box3())
    assert dist.covariance == pytest.approx(np.diag([1.5**2, 1.0]), rel=1e-12)


def test_scale_stds_matches_diagonal_similarity():
    rng = np.random.default_rng(21)
    a = rng.standard_normal((3, 3))
    dist = SearchDistribution([0.0, 0.0, 0.0], 1.3)
    dist.C = a @ a.T + np.eye(3)
    dist._stale = True
    before = dist.covariance
    factors = np.array([0.5, 1.0, 2.0])
    dist.scale_stds(factors)
    expected = before * np.outer(factors, factors)
    assert dist.covariance == pytest.approx(expected, rel=1e-12)


# -- clone --------------------------------------------------------------------


def test_clone_is_independent():
    dist = SearchDistribution([1.0, 2.0], 0.5)
    dup = dist.clone()
    dup.mean[0] = 99.0
    dup.C[0, 0] = 7.0
    assert dist.mean[0] == 1.0 and dist.C[0, 0] == 1.0


def test_clone_fresh_adaptation_resets_theta():
    dist = SearchDistribution(np.zeros(3), 1.0)
    rng = np.random.default_rng(4)
    for _ in range(5):
        cand = dist.ask(box3(3), rng)
        dist.tell(cand, ranking_of(cand[:, 0]))
    fresh = dist.clone(fresh_adaptation=True)
    assert fresh.iteration == 0
    assert np.array_equal(fresh.p_sigma, np.zeros(3))
    assert np.array_equal(fresh.p_c, np.zeros(3))
    assert np.allclose(fresh.covariance, dist.covariance)
    kept = dist.clone(fresh_adaptation=False)
    assert kept.iteration == dist.iteration
    assert np.array_equal(kept.p_sigma, dist.p_sigma)
