"""Random-graph generator checks: shape invariants and the degree law."""
import math

import pytest

from rumorsim.graph import SocialGraph, generate_graph
from rumorsim.models import poisson_pmf


class TestSocialGraphInvariants:
    def test_accepts_a_valid_graph(self):
        g = SocialGraph(3, ((1, 2), (0,), (0,)))
        assert g.edge_count == 2
        assert g.degrees() == [2, 1, 1]

    def test_rejects_asymmetry(self):
        with pytest.raises(ValueError, match="symmetric"):
            SocialGraph(3, ((1,), (), ()))

    def test_rejects_self_loops(self):
        with pytest.raises(ValueError, match="self-loop"):
            SocialGraph(2, ((0, 1), (0,)))

    def test_rejects_unsorted_or_duplicate_neighbors(self):
        with pytest.raises(ValueError, match="sorted"):
            SocialGraph(3, ((2, 1), (0,), (0,)))
        with pytest.raises(ValueError, match="sorted"):
            SocialGraph(2, ((1, 1), (0,)))

    def test_rejects_out_of_range_ids(self):
        with pytest.raises(ValueError, match="out-of-range"):
            SocialGraph(2, ((5,), ()))


class TestGenerateGraph:
    def test_two_vertices_with_full_degree_gives_the_single_edge(self):
        g = generate_graph(2, 1.0, graph_seed=0)
        assert g.adjacency == ((1,), (0,))

    def test_full_degree_gives_complete_graph(self):
        g = generate_graph(5, 4.0, graph_seed=3)
        assert g.edge_count == 10

    def test_deterministic_per_seed(self):
        a = generate_graph(300, 8.0, graph_seed=42)
        b = generate_graph(300, 8.0, graph_seed=42)
        c = generate_graph(300, 8.0, graph_seed=43)
        assert a == b
        assert a != c

    def test_mean_degree_and_poisson_law(self):
        # Monte-Carlo: the binomial mean is the requested degree exactly, and
        # the pooled degree histogram approaches the Poisson law.
        mean_degrees = []
        histogram = {}
        total = 0
        for seed in range(5):
            g = generate_graph(2000, 10.0, graph_seed=seed)
            mean_degrees.append(g.mean_degree())
            for d in g.degrees():
                histogram[d] = histogram.get(d, 0) + 1
                total += 1
        average = sum(mean_degrees) / len(mean_degrees)
        assert average == pytest.approx(10.0, rel=0.02)
        support = range(0, 10 + int(20 * math.sqrt(10.0)))
        tv = 0.5 * sum(abs(histogram.get(k, 0) / total - poisson_pmf(k, 10.0))
                       for k in support)
        assert tv <= 0.05

    def test_rejects_bad_parameters(self):
        with pytest.raises(ValueError):
            generate_graph(1, 1.0, 0)
        with pytest.raises(ValueError):
            generate_graph(10, 0.0, 0)
        with pytest.raises(ValueError):
            generate_graph(10, 9.5, 0)
