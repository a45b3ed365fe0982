import itertools
from collections import defaultdict

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bindgraph.models import CLModel, ERModel, SBModel, load_kr
from bindgraph.motifs import (TripleSpec, aggregate, analytic_overlap, expected_counts, local_partition_probs,
                              motif3, motif3_eigm, motif3_local, motif3_maximal, motif3_parallel,
                              pairwise_joint)
from bindgraph.oracle import naive_expected_counts
from bindgraph.realization import BindingParams

unit = st.floats(0.0, 1.0)
PAIRS = ("e12", "e13", "e23")
# nodes of each pair
PAIR_NODES = ((0, 1), (0, 2), (1, 2))


@st.composite
def triples(draw, schemes=("eigm", "maximal", "local", "parallel")):
    scheme = draw(st.sampled_from(schemes))
    residual = draw(st.sampled_from(["shared", "independent"]))
    vals = [draw(unit) for _ in range(6)]
    return TripleSpec(*vals, R=draw(st.integers(1, 12)), scheme=scheme, residual=residual)


def iterate_partitions(g, R):
    """Distribution of the final grouping of the 3 pairs, by iterating rounds."""
    states = {(None, None, None): 1.0}
    outcomes = []
    for sampled in itertools.product([0, 1], repeat=3):
        pr = np.prod([g[i] if sampled[i] else 1 - g[i] for i in range(3)])
        inside = [e for e, (a, b) in enumerate(PAIR_NODES) if sampled[a] and sampled[b]]
        outcomes.append((pr, inside))
    for r in range(R):
        nxt = defaultdict(float)
        for state, w in states.items():
            for pr, inside in outcomes:
                s = list(state)
                for e in inside:
                    if s[e] is None:
                        s[e] = r
                nxt[tuple(s)] += w * pr
        states = nxt
    together = alone0 = alone1 = alone2 = separate = 0.0
    for state, w in states.items():
        lab = [x if x is not None else ("solo", e) for e, x in enumerate(state)]
        if lab[0] == lab[1] == lab[2]:
            together += w
        elif lab[1] == lab[2]:
            alone0 += w
        elif lab[0] == lab[2]:
            alone1 += w
        elif lab[0] == lab[1]:
            alone2 += w
        else:
            separate += w
    return together, [alone0, alone1, alone2], separate


class TestExamples:
    def test_eigm(self):
        assert motif3_eigm(TripleSpec(0.5, 0.5, 0.5)).triangle == 0.125
        assert motif3_eigm(TripleSpec(1, 1, 0))[("e12", "e13")] == 1.0
        assert motif3_eigm(TripleSpec(0.2, 0.5, 0.7))[()] == pytest.approx(0.12)

    def test_maximal_prefix_law(self):
        d = motif3_maximal(TripleSpec(0.2, 0.5, 0.7, scheme="maximal"))
        assert d[()] == pytest.approx(0.3)
        assert d[("e23",)] == pytest.approx(0.2)
        assert d[("e13", "e23")] == pytest.approx(0.3)
        assert d.triangle == pytest.approx(0.2)
        assert sum(d.prob) == pytest.approx(1.0)

    def test_maximal_equal_marginals(self):
        d = motif3_maximal(TripleSpec(0.4, 0.4, 0.4, scheme="maximal"))
        assert d.triangle == pytest.approx(0.4)
        assert d[()] == pytest.approx(0.6)
        assert np.allclose(d.prob[1:7], 0)

    def test_local_single_round(self):
        t = TripleSpec(0.5, 0.5, 0.5, 0.5, 0.5, 0.5, R=1, scheme="local")
        assert motif3_local(t).triangle == pytest.approx(0.171875, abs=1e-15)

    def test_parallel_residual_mismatch(self):
        with pytest.raises(ValueError):
            motif3_parallel(TripleSpec(0.5, 0.5, 0.5, scheme="parallel"), residual="independent")

    def test_pairwise_joint_limits(self):
        assert pairwise_joint(TripleSpec(0.3, 0.6, 0.1), "e12", "e13") == pytest.approx(0.18)
        assert pairwise_joint(TripleSpec(0.3, 0.6, 0.1, scheme="maximal"), "e12", "e13") == pytest.approx(0.3)

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            TripleSpec(1.2, 0.1, 0.1)

    def test_unknown_scheme(self):
        with pytest.raises(ValueError):
            motif3(TripleSpec(0.1, 0.1, 0.1, scheme="chunked"))


class TestLawInvariants:
    @given(triples())
    def test_is_a_distribution(self, t):
        prob = motif3(t).prob
        assert np.all(prob >= -1e-12) and np.all(prob <= 1 + 1e-12)
        assert prob.sum() == pytest.approx(1.0, abs=1e-10)

    @given(triples())
    def test_marginals_reproduce_p(self, t):
        d = motif3(t)
        for e, p in zip(PAIRS, t.p):
            assert d.marginal(e) == pytest.approx(p, abs=1e-10)

    @given(triples(), st.sampled_from(list(itertools.combinations(PAIRS, 2))))
    def test_pairwise_joint_is_marginal_of_law(self, t, ef):
        d = motif3(t)
        assert pairwise_joint(t, *ef) == pytest.approx(d.joint(*ef), abs=1e-10)

    @given(triples(schemes=("local", "parallel")), st.sampled_from(list(itertools.combinations(PAIRS, 2))))
    def test_positive_association(self, t, ef):
        p = dict(zip(PAIRS, t.p))
        assert pairwise_joint(t, *ef) >= p[ef[0]] * p[ef[1]] - 1e-12

    @given(triples(schemes=("local", "parallel")))
    def test_triangle_dominance(self, t):
        assert motif3(t).triangle >= t.p12 * t.p13 * t.p23 - 1e-12


class TestReductions:
    @given(unit, unit, unit, st.integers(1, 20))
    def test_local_without_sampling_is_eigm(self, a, b, c, R):
        loc = motif3_local(TripleSpec(a, b, c, 0, 0, 0, R=R, scheme="local")).prob
        assert np.max(np.abs(loc - motif3_eigm(TripleSpec(a, b, c)).prob)) <= 1e-12

    @given(unit, unit, unit, st.integers(1, 20))
    def test_local_full_sampling_is_maximal(self, a, b, c, R):
        loc = motif3_local(TripleSpec(a, b, c, 1, 1, 1, R=R, scheme="local")).prob
        assert np.max(np.abs(loc - motif3_maximal(TripleSpec(a, b, c)).prob)) <= 1e-12

    @given(unit, unit, unit, st.sampled_from(["shared", "independent"]))
    def test_parallel_one_full_round_is_maximal(self, a, b, c, residual):
        par = motif3_parallel(TripleSpec(a, b, c, 1, 1, 1, R=1, scheme="parallel", residual=residual)).prob
        assert np.max(np.abs(par - motif3_maximal(TripleSpec(a, b, c)).prob)) <= 1e-12

    @given(unit, unit, unit, st.integers(1, 20))
    def test_parallel_without_sampling_is_residual_only(self, a, b, c, R):
        ind = motif3_parallel(TripleSpec(a, b, c, 0, 0, 0, R=R, scheme="parallel", residual="independent")).prob
        sh = motif3_parallel(TripleSpec(a, b, c, 0, 0, 0, R=R, scheme="parallel", residual="shared")).prob
        assert np.max(np.abs(ind - motif3_eigm(TripleSpec(a, b, c)).prob)) <= 1e-12
        assert np.max(np.abs(sh - motif3_maximal(TripleSpec(a, b, c)).prob)) <= 1e-12


class TestLocalPartition:
    @given(unit, unit, unit, st.integers(1, 8))
    def test_matches_round_iteration(self, g1, g2, g3, R):
        together, alone, separate = local_partition_probs(g1, g2, g3, R)
        want = iterate_partitions((g1, g2, g3), R)
        assert together == pytest.approx(want[0], abs=1e-12)
        assert alone == pytest.approx(want[1], abs=1e-12)
        assert separate == pytest.approx(want[2], abs=1e-12)
        assert together + sum(alone) + separate == pytest.approx(1.0, abs=1e-12)

    @given(unit, unit, st.integers(1, 30))
    def test_unsampled_node_prevents_merging(self, g1, g2, R):
        together, alone, separate = local_partition_probs(g1, g2, 0.0, R)
        assert together == 0.0
        assert alone[1] == alone[2] == 0.0


def test_local_partition_large_R_is_stable():
    together, alone, separate = local_partition_probs(1e-4, 1e-4, 1e-4, 10**6)
    want = iterate_partitions((1e-4, 1e-4, 1e-4), 1)
    assert np.isfinite(together) and 0 <= separate <= 1
    assert want[2] > separate


class TestExpectedCounts:
    def test_er_examples(self):
        m = ERModel(4, 0.5)
        assert expected_counts(m, BindingParams("local", 0.0, R=3)).triangles == pytest.approx(0.5)
        assert expected_counts(m, BindingParams("local", 1.0, R=3)).triangles == pytest.approx(2.0)
        assert naive_expected_counts(m, BindingParams("eigm")).triangles == pytest.approx(0.5)

    def test_er_eigm_closed_form(self):
        n, p = 25, 0.3
        c = expected_counts(ERModel(n, p), BindingParams("eigm"))
        assert c.triangles == pytest.approx(n * (n - 1) * (n - 2) / 6 * p ** 3)
        assert c.wedges == pytest.approx(n * (n - 1) * (n - 2) / 2 * p ** 2)
        assert c.edges == pytest.approx(n * (n - 1) / 2 * p)

    @pytest.mark.parametrize("params", [
        BindingParams("eigm"),
        BindingParams("local", [0.2, 0.9, 0.5], R=7),
        BindingParams("parallel", [0.2, 0.9, 0.5], R=3),
        BindingParams("parallel", [0.2, 0.9, 0.5], R=3, residual="independent"),
    ])
    def test_aggregate_matches_naive_sb_cl(self, params):
        sb = SBModel(np.repeat([0, 1, 2], [9, 14, 7]),
                     np.array([[0.6, 0.2, 0.05], [0.2, 0.3, 0.1], [0.05, 0.1, 0.8]]))
        cl = CLModel(np.repeat([1.0, 4.0, 9.0], [15, 10, 5]))
        for m in (sb, cl):
            fast, slow = expected_counts(m, params), naive_expected_counts(m, params)
            for f in ("triangles", "wedges", "edges"):
                assert getattr(fast, f) == pytest.approx(getattr(slow, f), rel=1e-9)

    @pytest.mark.parametrize("k", [1, 2, 3, 4])
    def test_aggregate_matches_naive_kr(self, k):
        m = load_kr([[0.85, 0.4], [0.4, 0.2]], k)
        params = BindingParams("local", np.linspace(0.1, 0.8, k + 1), R=5)
        fast, slow = expected_counts(m, params), naive_expected_counts(m, params)
        assert fast.triangles == pytest.approx(slow.triangles, rel=1e-9, abs=1e-15)
        assert fast.wedges == pytest.approx(slow.wedges, rel=1e-9, abs=1e-15)
        assert fast.edges == pytest.approx(slow.edges, rel=1e-9)

    def test_kr_weights_count_triples(self):
        for k in range(1, 6):
            agg = aggregate(load_kr([[0.5, 0.5], [0.5, 0.5]], k))
            n = 2 ** k
            assert agg.tri_w.sum() == pytest.approx(n * (n - 1) * (n - 2) / 6)
            assert agg.pair_w.sum() == pytest.approx(n * (n - 1) / 2)

    def test_naive_cap(self):
        with pytest.raises(ValueError):
            naive_expected_counts(ERModel(61, 0.1), BindingParams("eigm"))

    @pytest.mark.parametrize("scheme", ["local", "parallel"])
    def test_triangles_increase_with_g(self, scheme):
        m = CLModel(np.repeat([2.0, 6.0], [40, 10]))
        vals = [expected_counts(m, BindingParams(scheme, g, R=10, residual="independent")).triangles
                for g in np.linspace(0, 1, 6)]
        assert np.all(np.diff(vals) >= -1e-9)


class TestOverlap:
    def test_er(self):
        assert analytic_overlap(ERModel(30, 0.23)) == pytest.approx(0.23)

    def test_deterministic_graph(self):
        m = SBModel(np.arange(4), np.array([[0, 1, 0, 1], [1, 0, 1, 0], [0, 1, 0, 0], [1, 0, 0, 0.0]]))
        assert analytic_overlap(m) == pytest.approx(1.0)

    def test_matches_pair_sum(self):
        m = CLModel(np.repeat([3.0, 10.0], [70, 30]))
        P = m.prob_matrix()[np.triu_indices(100, 1)]
        assert analytic_overlap(m) == pytest.approx((P ** 2).sum() / P.sum(), rel=1e-12)

    def test_zero_model(self):
        with pytest.raises(ValueError):
            analytic_overlap(ERModel(5, 0.0))
