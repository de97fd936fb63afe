import io

import numpy as np
import pytest

from graphdiff.graph import (CsrGraph, EdgeEvent, GraphFormatError,
                             GraphStructureError, apply_event, apply_events,
                             load_csr_cache, load_edge_list, save_csr_cache,
                             spectral_norm_estimate, volume)
from graphdiff.synth import complete_graph, erdos_renyi


def load(text):
    return load_edge_list(io.StringIO(text))


class TestLoadEdgeList:
    def test_path_graph(self):
        g = load("0 1\n1 2\n")
        assert g.n == 3 and g.m == 2
        assert g.degrees.tolist() == [1, 2, 1]

    def test_duplicates_and_self_loops_dropped(self):
        g = load("0 1\n1 0\n0 0\n")
        assert g.n == 2 and g.m == 1

    def test_first_appearance_remap(self):
        g = load("7 9\n9 3\n")
        # 7 -> 0, 9 -> 1, 3 -> 2
        assert g.n == 3
        assert g.degrees.tolist() == [1, 2, 1]
        assert g.neighbors(1).tolist() == [0, 2]

    def test_comments_and_whitespace(self):
        g = load("# header\n0 1\n\n  1   2 \n")
        assert g.n == 3 and g.m == 2

    def test_malformed_line_reports_number(self):
        with pytest.raises(GraphFormatError, match="line 2"):
            load("0 1\n0 1 2\n")

    def test_empty_graph_errors(self):
        with pytest.raises(GraphFormatError, match="empty"):
            load("# nothing\n")

    def test_loaded_graph_is_symmetric(self):
        g = load("0 1\n1 2\n2 3\n3 0\n0 2\n")
        g.validate()


class TestVolume:
    def test_single_node(self, p3):
        assert volume(p3, [1]) == 2

    def test_whole_graph(self, p3):
        assert volume(p3, [0, 1, 2]) == 4  # 2m

    def test_star_subset(self, s4):
        assert volume(s4, [0, 1]) == 4  # degrees 3 + 1

    def test_out_of_range(self, p3):
        with pytest.raises(GraphStructureError):
            volume(p3, [5])


class TestApplyEvent:
    def test_insert_out_of_range(self, p2):
        with pytest.raises(GraphStructureError):
            apply_event(p2, EdgeEvent("insert", 0, 2))

    def test_delete_edge(self, p3):
        g = apply_event(p3, EdgeEvent("delete", 0, 1))
        assert g.m == 1
        assert g.degrees.tolist() == [0, 1, 1]
        g.validate()

    def test_insert_existing_is_error(self, p2):
        with pytest.raises(GraphStructureError):
            apply_event(p2, EdgeEvent("insert", 0, 1))

    def test_delete_missing_is_error(self, p3):
        with pytest.raises(GraphStructureError):
            apply_event(p3, EdgeEvent("delete", 0, 2))

    def test_self_loop_event_rejected(self):
        with pytest.raises(ValueError):
            EdgeEvent("insert", 1, 1)

    def test_n_unchanged_and_valid(self, k3):
        g = apply_event(k3, EdgeEvent("delete", 0, 1))
        assert g.n == 3
        g.validate()

    @pytest.mark.parametrize("seed", range(8))
    def test_insert_delete_round_trip(self, seed):
        g = erdos_renyi(30, 0.15, seed=seed)
        rng = np.random.default_rng(seed)
        missing = [(u, v) for u in range(30) for v in range(u + 1, 30)
                   if not g.has_edge(u, v)]
        u, v = missing[rng.integers(len(missing))]
        g2 = apply_event(apply_event(g, EdgeEvent("insert", u, v)),
                         EdgeEvent("delete", u, v))
        assert np.array_equal(g2.offsets, g.offsets)
        assert np.array_equal(g2.targets, g.targets)

    def test_batch_matches_sequential(self):
        g = erdos_renyi(25, 0.2, seed=3)
        events = []
        for u in range(5):
            if g.degrees[u] > 0:
                v = int(g.neighbors(u)[-1])
                if not any(e.u == min(u, v) and e.v == max(u, v) for e in events):
                    events.append(EdgeEvent("delete", min(u, v), max(u, v)))
        events.append(EdgeEvent("insert", 0, 24) if not g.has_edge(0, 24)
                      else EdgeEvent("delete", 0, 24))
        seq = g
        for e in events:
            seq = apply_event(seq, e)
        batch = apply_events(g, events)
        assert np.array_equal(batch.offsets, seq.offsets)
        assert np.array_equal(batch.targets, seq.targets)


class TestSpectralNorm:
    def test_p2(self, p2):
        assert spectral_norm_estimate(p2, iters=300, seed=0) == pytest.approx(1.0, abs=1e-9)

    def test_k3(self, k3):
        assert spectral_norm_estimate(k3, iters=300, seed=0) == pytest.approx(2.0, abs=1e-9)

    def test_star(self, s4):
        assert spectral_norm_estimate(s4, iters=500, seed=0) == pytest.approx(
            np.sqrt(3.0), abs=1e-9)

    def test_capped_by_dmax(self):
        g = complete_graph(5)
        assert spectral_norm_estimate(g, iters=2, seed=1) <= g.d_max

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_dense_eigensolve(self, seed):
        g = erdos_renyi(40, 0.15, seed=seed)
        a = np.zeros((g.n, g.n))
        for u in range(g.n):
            a[u, g.neighbors(u)] = 1.0
        lam_true = float(np.linalg.eigvalsh(a).max())
        lam_hat = spectral_norm_estimate(g, iters=5000, seed=seed)
        assert lam_hat == pytest.approx(lam_true, abs=1e-6)

    def test_monotone_rayleigh(self):
        g = erdos_renyi(30, 0.2, seed=11)
        vals = [spectral_norm_estimate(g, iters=k, seed=4) for k in range(1, 15)]
        assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))

    def test_empty_graph_errors(self):
        with pytest.raises(GraphStructureError):
            spectral_norm_estimate(CsrGraph(n=0, offsets=np.zeros(1, np.int64),
                                            targets=np.empty(0, np.int64)), 10, 0)

    def test_edgeless_graph_is_zero(self):
        g = CsrGraph(n=3, offsets=np.zeros(4, np.int64), targets=np.empty(0, np.int64))
        assert spectral_norm_estimate(g, iters=5, seed=0) == 0.0


class TestCsrCache:
    def test_round_trip(self, tmp_path):
        g = erdos_renyi(50, 0.1, seed=2)
        path = tmp_path / "g.csr"
        save_csr_cache(g, path)
        g2 = load_csr_cache(path)
        assert g2.n == g.n
        assert np.array_equal(g2.offsets, g.offsets)
        assert np.array_equal(g2.targets, g.targets)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.csr"
        path.write_bytes(b"NOTCSR" + b"\x00" * 16)
        with pytest.raises(GraphFormatError):
            load_csr_cache(path)


def test_synth_generators_are_simple_and_seeded():
    from graphdiff.synth import preferential_attachment

    g1 = erdos_renyi(40, 0.1, seed=9)
    g2 = erdos_renyi(40, 0.1, seed=9)
    assert np.array_equal(g1.targets, g2.targets)
    g1.validate()
    pa = preferential_attachment(200, 3, seed=1)
    pa.validate()
    assert pa.m == pytest.approx(3 * 200, rel=0.05)
