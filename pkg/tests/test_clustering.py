from __future__ import annotations

import math

import numpy as np
import pytest

from papertrail.clustering import (
    ClusterConfig,
    ClusterSolution,
    Dendrogram,
    cluster_centroids,
    cut_levels,
    cut_tree,
    gap_criterion_k,
    gap_statistic,
    GapPoint,
    hierarchical_cluster,
    run_pipeline,
    select_k,
    silhouette,
)
from papertrail.composition import distance_matrix
from papertrail.errors import (
    DegenerateData,
    EmptyCluster,
    EmptyCurves,
    FewerThanTwoPoints,
    KOutOfRange,
    SingleCluster,
)
from papertrail.kernels import get_backend
from papertrail.resolution import ResearcherProfile

from oracles import (
    brute_force_agglomerate,
    gap_oracle,
    merge_sequence,
    silhouette_oracle,
)

LINKAGES = ("ward", "complete", "average")


def _random_points(rng, n):
    return rng.normal(size=(n, 3))


def _compiled_or_skip():
    try:
        return get_backend("compiled")
    except ImportError:
        pytest.skip("compiled backend unavailable")


# --- agglomeration -------------------------------------------------------------


def test_two_points_merge_at_their_distance():
    points = np.array([[0.0, 0.0, 0.0], [3.0, 4.0, 0.0]])
    dmat, _ = distance_matrix(points)
    for linkage in LINKAGES:
        tree = hierarchical_cluster(dmat, linkage)
        assert tree.merges.shape == (1, 4)
        a, b, height, size = tree.merges[0]
        assert (a, b, size) == (0.0, 1.0, 2.0)
        assert height == pytest.approx(5.0, abs=1e-12)


def test_two_tight_far_pairs_merge_pairs_first():
    points = np.array(
        [[0.0, 0, 0], [0.1, 0, 0], [50.0, 0, 0], [50.1, 0, 0]]
    )
    dmat, _ = distance_matrix(points)
    for linkage in LINKAGES:
        tree = hierarchical_cluster(dmat, linkage)
        first_two = {frozenset(map(int, row[:2])) for row in tree.merges[:2]}
        assert first_two == {frozenset({0, 1}), frozenset({2, 3})}
        assert tree.merges[2, 2] == tree.heights.max()


@pytest.mark.parametrize("linkage", LINKAGES)
def test_merge_sequence_matches_brute_force_oracle(linkage):
    rng = np.random.default_rng(1234)
    for _ in range(12):
        n = int(rng.integers(8, 13))
        points = _random_points(rng, n)
        dmat, _ = distance_matrix(points)
        tree = hierarchical_cluster(dmat, linkage)
        got = merge_sequence(tree)
        expected = brute_force_agglomerate(points, dmat, linkage)
        for (ga, gb, gh), (ea, eb, eh) in zip(got, expected):
            assert {ga, gb} == {ea, eb}
            assert gh == pytest.approx(eh, abs=1e-9)


def test_ward_heights_are_monotone_nondecreasing():
    rng = np.random.default_rng(7)
    for _ in range(20):
        points = _random_points(rng, int(rng.integers(5, 40)))
        dmat, _ = distance_matrix(points)
        tree = hierarchical_cluster(dmat, "ward")
        assert np.all(np.diff(tree.heights) >= -1e-12)


def test_matches_scipy_linkage_on_random_data():
    scipy_hierarchy = pytest.importorskip("scipy.cluster.hierarchy")
    from scipy.spatial.distance import squareform

    rng = np.random.default_rng(99)
    points = _random_points(rng, 30)
    dmat, _ = distance_matrix(points)
    for linkage in LINKAGES:
        tree = hierarchical_cluster(dmat, linkage)
        if linkage == "ward":
            reference = scipy_hierarchy.linkage(points, method="ward")
        else:
            reference = scipy_hierarchy.linkage(
                squareform(dmat, checks=False), method=linkage
            )
        assert np.allclose(np.sort(tree.heights), np.sort(reference[:, 2]), atol=1e-8)
        ours = cut_tree(tree, 4)
        theirs = scipy_hierarchy.fcluster(reference, t=4, criterion="maxclust")
        from sklearn.metrics import adjusted_rand_score

        assert adjusted_rand_score(ours, theirs) == pytest.approx(1.0)


def test_tie_break_picks_smallest_leaf_key():
    # Four corners of a square: the first merge has four equal candidates.
    points = np.array([[0.0, 0, 0], [1.0, 0, 0], [0.0, 1, 0], [1.0, 1, 0]])
    dmat, _ = distance_matrix(points)
    backends = [get_backend("python")]
    try:
        backends.append(get_backend("compiled"))
    except ImportError:
        pass
    for linkage in LINKAGES:
        for backend in backends:
            tree = hierarchical_cluster(dmat, linkage, backend=backend)
            assert {int(tree.merges[0, 0]), int(tree.merges[0, 1])} == {0, 1}


def test_single_point_rejected():
    with pytest.raises(FewerThanTwoPoints):
        hierarchical_cluster(np.zeros((1, 1)))


def test_backends_produce_bit_identical_dendrograms():
    rng = np.random.default_rng(55)
    py = get_backend("python")
    cx = _compiled_or_skip()
    for _ in range(6):
        points = _random_points(rng, int(rng.integers(5, 60)))
        dmat, _ = distance_matrix(points)
        for linkage in LINKAGES:
            a = hierarchical_cluster(dmat, linkage, backend=py).merges
            b = hierarchical_cluster(dmat, linkage, backend=cx).merges
            assert np.array_equal(a, b)


# --- cutting ---------------------------------------------------------------------


@pytest.fixture(scope="module")
def random_tree():
    rng = np.random.default_rng(11)
    points = _random_points(rng, 20)
    dmat, _ = distance_matrix(points)
    return hierarchical_cluster(dmat, "ward"), dmat


def test_cut_k1_is_one_cluster(random_tree):
    tree, _ = random_tree
    assert set(cut_tree(tree, 1).tolist()) == {0}


def test_cut_kn_is_singletons(random_tree):
    tree, _ = random_tree
    labels = cut_tree(tree, tree.n_leaves)
    assert sorted(labels.tolist()) == list(range(tree.n_leaves))


def test_cut_two_pair_fixture_recovers_pairs():
    points = np.array([[0.0, 0, 0], [0.1, 0, 0], [50.0, 0, 0], [50.1, 0, 0]])
    dmat, _ = distance_matrix(points)
    labels = cut_tree(hierarchical_cluster(dmat, "ward"), 2)
    assert labels[0] == labels[1] != labels[2] == labels[3]


def test_cut_yields_exactly_k_nonempty_clusters(random_tree):
    tree, _ = random_tree
    n = tree.n_leaves
    levels = cut_levels(tree, range(1, n + 1))
    for k in range(1, n + 1):
        counts = np.bincount(levels[k])
        assert len(counts) == k and np.all(counts > 0)


def test_cut_out_of_range(random_tree):
    tree, _ = random_tree
    with pytest.raises(KOutOfRange):
        cut_tree(tree, 0)
    with pytest.raises(KOutOfRange):
        cut_tree(tree, tree.n_leaves + 1)


# --- silhouette ---------------------------------------------------------------------


def test_tight_pairs_silhouette_is_exactly_one():
    # Intra-pair distance 0 makes a(i) = 0 and s(i) = 1 exactly.
    points = np.array([[0.0, 0, 0], [0.0, 0, 0], [9.0, 0, 0], [9.0, 0, 0]])
    dmat, _ = distance_matrix(points)
    values, avg = silhouette(np.array([0, 0, 1, 1]), dmat)
    assert np.array_equal(values, np.ones(4))
    assert avg == 1.0


def test_singleton_scores_zero():
    points = np.array([[0.0, 0, 0], [1.0, 0, 0], [9.0, 0, 0]])
    dmat, _ = distance_matrix(points)
    values, _ = silhouette(np.array([0, 0, 1]), dmat)
    assert values[2] == 0.0


def test_six_point_fixture_matches_hand_oracle():
    rng = np.random.default_rng(2)
    points = _random_points(rng, 6)
    dmat, _ = distance_matrix(points)
    labels = np.array([0, 0, 1, 1, 2, 2])
    values, avg = silhouette(labels, dmat)
    expected = silhouette_oracle(labels, dmat)
    assert np.allclose(values, expected, atol=1e-12)
    assert avg == pytest.approx(expected.mean(), abs=1e-12)


def test_silhouette_values_bounded_and_average_consistent():
    rng = np.random.default_rng(31)
    for _ in range(25):
        n = int(rng.integers(6, 40))
        points = _random_points(rng, n)
        dmat, _ = distance_matrix(points)
        k = int(rng.integers(2, min(6, n)))
        labels = cut_tree(hierarchical_cluster(dmat, "ward"), k)
        values, avg = silhouette(labels, dmat)
        assert np.all(values >= -1) and np.all(values <= 1)
        assert values.min() <= avg <= values.max()


def test_silhouette_label_permutation_invariance():
    rng = np.random.default_rng(13)
    points = _random_points(rng, 12)
    dmat, _ = distance_matrix(points)
    labels = cut_tree(hierarchical_cluster(dmat, "ward"), 3)
    values, avg = silhouette(labels, dmat)
    relabeled = np.choose(labels, [2, 0, 1])
    values2, avg2 = silhouette(relabeled, dmat)
    assert np.allclose(values, values2, atol=1e-12)
    assert avg == pytest.approx(avg2, abs=1e-12)


def test_single_cluster_rejected():
    dmat = np.array([[0.0, 1.0], [1.0, 0.0]])
    with pytest.raises(SingleCluster):
        silhouette(np.array([0, 0]), dmat)


def test_empty_cluster_label_rejected():
    dmat = np.zeros((3, 3))
    with pytest.raises(EmptyCluster):
        silhouette(np.array([0, 0, 2]), dmat)


def test_silhouette_backends_agree():
    py = get_backend("python")
    cx = _compiled_or_skip()
    rng = np.random.default_rng(77)
    points = _random_points(rng, 30)
    dmat, _ = distance_matrix(points)
    labels = cut_tree(hierarchical_cluster(dmat, "ward"), 4)
    a, _ = silhouette(labels, dmat, backend=py)
    b, _ = silhouette(labels, dmat, backend=cx)
    assert np.allclose(a, b, atol=1e-12)


# --- gap statistic ----------------------------------------------------------------


def _blobs(rng, n_per=20, k=4, spread=0.05):
    centers = np.array(
        [[0.0, 0, 0], [8.0, 0, 0], [0.0, 8, 0], [8.0, 8, 0]][:k]
    )
    points = []
    for c in centers:
        points.append(c + rng.normal(scale=spread, size=(n_per, 3)))
    return np.vstack(points)


def test_gap_same_seed_is_bit_identical():
    rng = np.random.default_rng(3)
    points = _blobs(rng)
    ks = range(2, 8)
    a = gap_statistic(points, ks, b_iterations=20, seed=911)
    b = gap_statistic(points, ks, b_iterations=20, seed=911)
    assert a == b
    c = gap_statistic(points, ks, b_iterations=20, seed=912)
    assert a != c


def test_gap_criterion_selects_four_planted_blobs():
    rng = np.random.default_rng(8)
    points = _blobs(rng, n_per=15)
    curve = gap_statistic(points, range(2, 9), b_iterations=50, seed=5)
    assert gap_criterion_k(curve) == 4
    by_k = {p.k: p.gap for p in curve}
    assert max(by_k, key=by_k.get) == 4


def test_uniform_data_has_flat_gap_curve():
    rng = np.random.default_rng(21)
    points = rng.uniform(size=(60, 3))
    curve = gap_statistic(points, range(2, 9), b_iterations=40, seed=17)
    by_k = {p.k: p for p in curve}
    base = by_k[2].gap
    assert all(p.gap <= base + 2 * p.se for p in curve)


def test_gap_matches_independent_oracle_at_small_n():
    rng = np.random.default_rng(14)
    points = _blobs(rng, n_per=7, spread=0.3)
    ks = [2, 3, 4, 5]
    ours = gap_statistic(points, ks, b_iterations=8, seed=23)
    reference = gap_oracle(points, ks, b_iterations=8, seed=23, method="ward")
    for point, (k, gap, se) in zip(ours, reference):
        assert point.k == k
        assert point.gap == pytest.approx(gap, abs=1e-9)
        assert point.se == pytest.approx(se, abs=1e-9)


def test_gap_rejects_degenerate_data():
    with pytest.raises(DegenerateData):
        gap_statistic(np.zeros((10, 3)), [2, 3], b_iterations=5, seed=1)


# --- model selection ---------------------------------------------------------------


def _curve(values: dict[int, float], se: float = 0.01):
    return [GapPoint(k=k, gap=v, se=se) for k, v in values.items()]


def test_select_k_agreement():
    sil = {2: 0.4, 3: 0.5, 4: 0.9, 5: 0.3}
    gap = _curve({2: 0.1, 3: 0.5, 4: 1.0, 5: 1.0})
    assert select_k(sil, gap) == (4, True)


def test_select_k_tie_takes_smallest():
    sil = {2: 0.1, 3: 0.7, 4: 0.2, 5: 0.7}
    gap = _curve({2: 0.0, 3: 1.0, 4: 1.0, 5: 1.0})
    k, _ = select_k(sil, gap)
    assert k == 3


def test_select_k_disagreement_flagged():
    sil = {2: 0.1, 3: 0.2, 4: 0.9}
    gap = _curve({2: 1.0, 3: 1.0, 4: 1.0})  # gap rule stops at 2
    assert select_k(sil, gap) == (4, False)


def test_empty_curves_rejected():
    with pytest.raises(EmptyCurves):
        select_k({}, [])


# --- centroids -----------------------------------------------------------------------


def test_single_member_cluster_centroid_is_the_member():
    comps = np.array([[0.2, 0.5, 0.3], [0.0, 1.0, 0.0]])
    stats = cluster_centroids(np.array([0, 1]), comps)
    assert stats[1].centroid.p_during == 1.0
    assert stats[1].size == 1
    assert stats[0].percent == stats[1].percent == 50


def test_identical_members_mean_is_the_common_vector():
    comps = np.tile(np.array([[0.25, 0.5, 0.25]]), (5, 1))
    stats = cluster_centroids(np.zeros(5, dtype=int), comps)
    assert (
        stats[0].centroid.p_before,
        stats[0].centroid.p_during,
        stats[0].centroid.p_after,
    ) == (0.25, 0.5, 0.25)


def test_empty_cluster_rejected():
    with pytest.raises(EmptyCluster):
        cluster_centroids(np.array([0, 2]), np.array([[0.5, 0.25, 0.25]] * 2))


def test_centroids_sum_to_one(solution):
    for stat in solution.clusters:
        total = (
            stat.centroid.p_before + stat.centroid.p_during + stat.centroid.p_after
        )
        assert total == pytest.approx(1.0, abs=1e-9)


def test_centroid_multiset_invariant_under_relabeling():
    rng = np.random.default_rng(23)
    comps = rng.dirichlet((2, 2, 2), size=12)
    labels = np.array([0, 0, 0, 0, 1, 1, 1, 2, 2, 2, 2, 2])
    relabeled = np.choose(labels, [1, 2, 0])
    original = {
        (s.size, round(s.centroid.p_before, 12), round(s.centroid.p_during, 12))
        for s in cluster_centroids(labels, comps)
    }
    permuted = {
        (s.size, round(s.centroid.p_before, 12), round(s.centroid.p_during, 12))
        for s in cluster_centroids(relabeled, comps)
    }
    assert original == permuted


# --- pipeline ------------------------------------------------------------------------


def _profile(pid: str, years: dict[int, int]) -> ResearcherProfile:
    return ResearcherProfile(
        profile_id=pid,
        merged_source_ids=frozenset({pid}),
        canonical_name=pid,
        has_persistent_identifier=True,
        pubs_by_year=years,
    )


def test_pipeline_rejects_shared_composition():
    profiles = [_profile(f"p{i}", {2020: 4}) for i in range(10)]
    with pytest.raises(DegenerateData):
        run_pipeline(profiles)


def test_pipeline_excludes_allzero_profiles_and_reports_them():
    profiles = [
        _profile("a", {2016: 2, 2020: 2, 2024: 1}),
        _profile("b", {2020: 5}),
        _profile("c", {2016: 1, 2020: 1}),
        _profile("d", {}),
        _profile("e", {2024: 3, 2020: 1}),
    ]
    solution = run_pipeline(
        profiles, config=ClusterConfig(gap_iterations=5, k_max=3, seed=1)
    )
    assert solution.excluded_profiles == ("d",)
    assert set(solution.assignments) == {"a", "b", "c", "e"}


def test_pipeline_label_sets_match_cluster_sizes(solution):
    sizes = sorted(solution.sizes, reverse=True)
    assert sizes == [202, 68, 24, 18]
    counted: dict[int, int] = {}
    for label in solution.assignments.values():
        counted[label] = counted.get(label, 0) + 1
    assert sorted(counted.values(), reverse=True) == sizes


def test_solution_json_round_trip(solution):
    payload = solution.to_json()
    again = ClusterSolution.from_json(payload)
    assert again.k == solution.k
    assert again.assignments == solution.assignments
    assert again.silhouette_by_k == solution.silhouette_by_k
    assert again.gap_curve == tuple(solution.gap_curve)
    assert [c.size for c in again.clusters] == [c.size for c in solution.clusters]
    assert np.array_equal(again.dendrogram.merges, solution.dendrogram.merges)
