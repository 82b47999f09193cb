"""Bundled nets: structure, contracts, and agreement with the oracles."""

import math

import pytest

from qpn.errors import DeterminismViolationError, InvalidParamsError
from qpn.models import (
    ProtocolParams,
    blocking_expected_firings,
    detection_report,
    entanglement_net,
    measurement_net,
    passing_expected_firings,
    run_to_quiescence,
    slaz_blocking_net,
    slaz_passing_net,
    zeno_expected_firings,
    zeno_net,
    zeno_report,
)
from qpn.net import (
    Arc,
    PetriNet,
    PlaceDecl,
    PlaceKind,
    Policy,
    RunConfig,
    fire,
    run,
    run_final,
)
from qpn.oracle import bfs_reach, blocking_oracle, exact_measurement_dist, passing_oracle, zeno_oracle


class TestMeasurementNet:
    def test_structure(self):
        net, mapping = measurement_net()
        assert len(net.places) == 4
        assert len(net.transitions) == 3
        assert len(net.arcs) == 6
        assert mapping.k == 1.0
        assert mapping.places() == ["p2", "p3", "p4"]

    def test_born_run_fills_exactly_one_branch(self):
        net, _ = measurement_net()
        w = 1.0 / math.sqrt(3.0)
        for seed in range(24):
            final = run_final(
                net, net.initial_marking(), RunConfig(policy=Policy.BORN_RANDOM, seed=seed)
            ).marking
            branches = [v for v in final[1:]]
            assert sum(1 for v in branches if v != 0.0) == 1
            assert max(branches) == pytest.approx(w)

    def test_exact_distribution(self):
        net, _ = measurement_net()
        assert [p for _, p in exact_measurement_dist(net)] == pytest.approx([1 / 3] * 3)


class TestEntanglementNet:
    def test_structure_matches_pre_post_sets(self):
        net = entanglement_net()
        assert len(net.places) == 6
        assert len(net.transitions) == 4
        pre = {t: sorted(a.source for a in net.input_arcs(t)) for t in net.transition_ids()}
        post = {t: sorted(a.target for a in net.output_arcs(t)) for t in net.transition_ids()}
        assert pre == {"t1": ["p1"], "t2": ["p1"], "t3": ["p2"], "t4": ["p2"]}
        assert post == {
            "t1": ["p3", "p5"],
            "t2": ["p4", "p6"],
            "t3": ["p3", "p5"],
            "t4": ["p4", "p6"],
        }

    def test_fire_t1_marks_both_sides(self):
        net = entanglement_net()
        m = fire(net, net.initial_marking(), "t1")
        assert m[net.place_index["p3"]] == 1.0
        assert m[net.place_index["p5"]] == 1.0

    def test_fire_t2_marks_both_sides(self):
        net = entanglement_net()
        m = fire(net, net.initial_marking(), "t2")
        assert m[net.place_index["p4"]] == 1.0
        assert m[net.place_index["p6"]] == 1.0

    def test_reachability(self):
        order, quiescent = bfs_reach(entanglement_net())
        assert (len(order), len(quiescent)) == (8, 3)


class TestZenoNet:
    def test_initial_marking_vector(self):
        net, _ = zeno_net(ProtocolParams(N=7))
        assert net.initial_marking() == [0, 0, 1, 0, 0, 0, 0, 0, 7, 0, 0, 0, 1]
        assert len(net.places) == 13
        assert len(net.transitions) == 6

    def test_invalid_params(self):
        with pytest.raises(InvalidParamsError):
            zeno_net(ProtocolParams(N=1))

    @pytest.mark.parametrize("n", [2, 4, 10, 100])
    def test_matches_oracle(self, n):
        p10, p01 = zeno_report(ProtocolParams(N=n))
        o10, o01 = zeno_oracle(n)
        assert p10 == pytest.approx(o10, abs=1e-9)
        assert p01 == pytest.approx(o01, abs=1e-9)

    def test_n4_value(self):
        p10, _ = zeno_report(ProtocolParams(N=4))
        assert p10 == pytest.approx(0.530790, abs=1e-6)

    def test_n1000_value(self):
        p10, _ = zeno_report(ProtocolParams(N=1000))
        assert p10 == pytest.approx(0.99754, abs=1e-5)

    def test_survival_monotone_toward_one(self):
        values = [zeno_report(ProtocolParams(N=n))[0] for n in (2, 4, 10, 50, 200)]
        assert all(a < b for a, b in zip(values, values[1:]))
        assert values[-1] < 1.0

    def test_firing_count_linear(self):
        for n in (2, 3, 11):
            final = run_to_quiescence(zeno_net(ProtocolParams(N=n))[0], max_steps=10_000)
            assert final.firings == zeno_expected_firings(n)

    def test_run_records_expected_transitions(self):
        net, _ = zeno_net(ProtocolParams(N=3))
        trace = run(net, net.initial_marking(), RunConfig(max_steps=100))
        assert trace.fired() == ["t1", "t2", "t3", "t4", "t5", "t6"]


class TestSlazNets:
    def test_blocking_structure(self):
        net, mapping = slaz_blocking_net(ProtocolParams(N=2, M=2))
        assert len(net.places) == 24  # p1..p23 plus the absorption accumulator
        assert len(net.transitions) == 18
        assert net.place_ids()[:23] == [f"p{i}" for i in range(1, 24)]
        assert net.place_ids()[23] == "p_abs"
        assert mapping.places() == ["p2", "p21"]

    def test_passing_structure(self):
        net, mapping = slaz_passing_net(ProtocolParams(N=2, M=2))
        assert len(net.places) == 34  # p1..p33 plus the discard accumulator
        assert len(net.transitions) == 26
        assert net.place_ids()[:33] == [f"p{i}" for i in range(1, 34)]
        assert net.place_ids()[33] == "p_d3"
        assert mapping.places() == ["p2", "p21"]

    def test_invalid_params(self):
        with pytest.raises(InvalidParamsError):
            slaz_blocking_net(ProtocolParams(N=1, M=5))
        with pytest.raises(InvalidParamsError):
            slaz_passing_net(ProtocolParams(N=5, M=1))
        with pytest.raises(InvalidParamsError):
            detection_report("sideways", ProtocolParams(N=5, M=5))

    @pytest.mark.parametrize("n,m", [(2, 2), (5, 3), (40, 10), (320, 25)])
    def test_blocking_matches_oracle(self, n, m):
        report = detection_report("blocking", ProtocolParams(N=n, M=m))
        expected = blocking_oracle(n, m)
        assert report.d2 == pytest.approx(expected.d2, abs=1e-9)
        assert report.d1 == pytest.approx(expected.d1, abs=1e-9)
        assert report.absorbed == pytest.approx(expected.absorbed, abs=1e-9)
        assert report.total == pytest.approx(1.0, abs=1e-9)

    @pytest.mark.parametrize("n,m", [(2, 2), (5, 3), (40, 10), (320, 25)])
    def test_passing_matches_oracle(self, n, m):
        report = detection_report("passing", ProtocolParams(N=n, M=m))
        expected = passing_oracle(n, m)
        assert report.d1 == pytest.approx(expected.d1, abs=1e-9)
        assert report.d2 == pytest.approx(0.0, abs=1e-9)
        assert report.discarded == pytest.approx(expected.discarded, abs=1e-9)
        assert report.total == pytest.approx(1.0, abs=1e-9)

    def test_blocking_320_25_near_reference(self):
        report = detection_report("blocking", ProtocolParams(N=320, M=25))
        assert report.d2 == pytest.approx(0.912, abs=0.01)

    def test_passing_reference_values(self):
        assert detection_report("passing", ProtocolParams(N=320, M=25)).d1 == pytest.approx(
            0.906, abs=5e-4
        )

    def test_passing_n_independent(self):
        a = detection_report("passing", ProtocolParams(N=320, M=50)).d1
        b = detection_report("passing", ProtocolParams(N=500, M=50)).d1
        assert a == pytest.approx(b, abs=1e-9)
        assert a == pytest.approx(0.952, abs=5e-4)

    def test_firing_counts(self):
        final = run_to_quiescence(
            slaz_blocking_net(ProtocolParams(N=3, M=4))[0],
            max_steps=10_000,
        )
        assert final.firings == blocking_expected_firings(3, 4)
        final = run_to_quiescence(
            slaz_passing_net(ProtocolParams(N=3, M=4))[0],
            max_steps=10_000,
        )
        assert final.firings == passing_expected_firings(3, 4)

    def test_scavengers_never_fire(self):
        net, _ = slaz_blocking_net(ProtocolParams(N=2, M=2))
        fired = set(run(net, net.initial_marking(), RunConfig(max_steps=1000)).fired())
        assert fired.isdisjoint({"t15", "t16"})
        assert fired.issuperset({f"t{i}" for i in range(1, 15)} | {"t17", "t18"})
        net, _ = slaz_passing_net(ProtocolParams(N=2, M=2))
        fired = set(run(net, net.initial_marking(), RunConfig(max_steps=1000)).fired())
        assert fired.isdisjoint({"t16", "t25"})
        assert fired == {f"t{i}" for i in range(1, 27)} - {"t16", "t25"}


class TestKEncodingEquivalence:
    """The 10^14-token, k=1e-28 convention gives the same probabilities as k=1."""

    def test_zeno(self):
        a = zeno_report(ProtocolParams(N=10, k=1.0))
        b = zeno_report(ProtocolParams(N=10, k=1e-28))
        assert a[0] == pytest.approx(b[0], abs=1e-9)
        assert a[1] == pytest.approx(b[1], abs=1e-9)

    @pytest.mark.parametrize("mode", ["blocking", "passing"])
    def test_slaz(self, mode):
        a = detection_report(mode, ProtocolParams(N=50, M=10, k=1.0))
        b = detection_report(mode, ProtocolParams(N=50, M=10, k=1e-28))
        assert a.d1 == pytest.approx(b.d1, abs=1e-9)
        assert a.d2 == pytest.approx(b.d2, abs=1e-9)
        assert a.absorbed == pytest.approx(b.absorbed, abs=1e-9)
        assert a.discarded == pytest.approx(b.discarded, abs=1e-9)


class TestSingleEnabledAssertion:
    def test_conflicted_net_is_rejected(self):
        net = PetriNet(
            "conflict",
            [PlaceDecl("p1", PlaceKind.COUNTER, 1), PlaceDecl("p2", PlaceKind.COUNTER)],
            ["t1", "t2"],
            [Arc("p1", "t1"), Arc("p1", "t2"), Arc("t1", "p2"), Arc("t2", "p2")],
        )
        with pytest.raises(DeterminismViolationError):
            run_final(net, net.initial_marking(), RunConfig(), require_single_enabled=True)

    def test_protocol_nets_run_conflict_free(self):
        # run_to_quiescence asserts single-enabledness at every step
        run_to_quiescence(slaz_blocking_net(ProtocolParams(N=4, M=3))[0], max_steps=1000)
        run_to_quiescence(slaz_passing_net(ProtocolParams(N=4, M=3))[0], max_steps=1000)
        run_to_quiescence(zeno_net(ProtocolParams(N=9))[0], max_steps=1000)
