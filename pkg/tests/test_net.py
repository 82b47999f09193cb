"""Net structure and execution semantics."""

import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qpn.errors import (
    CounterViolationError,
    DivisionByZeroError,
    NetDefinitionError,
    NotEnabledError,
    ZeroWeightGroupError,
)
from qpn.expr import evaluate
from qpn.models import ProtocolParams, entanglement_net, measurement_net, zeno_net
from qpn.net import (
    Arc,
    ArcKind,
    PetriNet,
    PlaceDecl,
    PlaceKind,
    Policy,
    RunConfig,
    TerminalStatus,
    TransitionDecl,
    conflict_groups,
    fire,
    is_enabled,
    run,
    step,
)

A = PlaceKind.AMPLITUDE
C = PlaceKind.COUNTER


def manual_fire(net, m, tid):
    """Reference firing: snapshot weights, then consume / drain / deposit."""
    env = dict(zip(net.place_ids(), m))
    out = list(m)
    for arc in net.input_arcs(tid):
        if arc.kind == ArcKind.CONSUME:
            out[net.place_index[arc.source]] -= evaluate(arc.parsed_weight(), env)
    for arc in net.input_arcs(tid):
        if arc.kind == ArcKind.DRAIN:
            out[net.place_index[arc.source]] = 0.0
    for arc in net.output_arcs(tid):
        out[net.place_index[arc.target]] += evaluate(arc.parsed_weight(), env)
    return out


class TestValidation:
    def test_empty_net_rejected(self):
        with pytest.raises(NetDefinitionError):
            PetriNet("empty", [], [], [])

    def test_duplicate_place(self):
        with pytest.raises(NetDefinitionError):
            PetriNet("dup", [PlaceDecl("p1"), PlaceDecl("p1")], [], [])

    def test_place_transition_overlap(self):
        with pytest.raises(NetDefinitionError):
            PetriNet("overlap", [PlaceDecl("x")], ["x"], [])

    def test_dangling_arc(self):
        with pytest.raises(NetDefinitionError):
            PetriNet("dangling", [PlaceDecl("p1")], ["t1"], [Arc("p1", "t9")])

    def test_counter_initial_must_be_nonnegative_integer(self):
        with pytest.raises(NetDefinitionError):
            PetriNet("bad", [PlaceDecl("p1", C, -1)], [], [])
        with pytest.raises(NetDefinitionError):
            PetriNet("bad", [PlaceDecl("p1", C, 0.5)], [], [])

    def test_amplitude_initial_may_be_fractional(self):
        net = PetriNet("ok", [PlaceDecl("p1", A, -0.25)], [], [])
        assert net.initial_marking() == [-0.25]

    def test_weight_referencing_undeclared_place(self):
        with pytest.raises(NetDefinitionError):
            PetriNet(
                "ref",
                [PlaceDecl("p1", C, 1)],
                ["t1"],
                [Arc("p1", "t1", "m(p99)")],
            )

    def test_drain_weight_must_read_source(self):
        with pytest.raises(NetDefinitionError):
            PetriNet(
                "drain",
                [PlaceDecl("p1", A, 1)],
                ["t1"],
                [Arc("p1", "t1", "1", ArcKind.DRAIN)],
            )

    def test_output_arc_cannot_be_guard(self):
        with pytest.raises(NetDefinitionError):
            PetriNet(
                "out",
                [PlaceDecl("p1", C, 1)],
                ["t1"],
                [Arc("t1", "p1", "1", ArcKind.GUARD)],
            )


class TestIsEnabled:
    def test_measurement_initially_enabled(self):
        net, _ = measurement_net()
        assert is_enabled(net, net.initial_marking(), "t1")

    def test_measurement_all_zero_disabled(self):
        net, _ = measurement_net()
        assert not is_enabled(net, [0.0, 0.0, 0.0, 0.0], "t1")

    def test_entanglement_all_enabled(self):
        net = entanglement_net()
        m0 = net.initial_marking()
        assert [t for t in net.transition_ids() if is_enabled(net, m0, t)] == [
            "t1",
            "t2",
            "t3",
            "t4",
        ]

    def test_evaluation_error_is_raised_not_false(self):
        net = PetriNet(
            "div",
            [PlaceDecl("p1", A, 0.0), PlaceDecl("p2", A, 1.0)],
            ["t1"],
            [Arc("p2", "t1", "1/m(p1)")],
        )
        with pytest.raises(DivisionByZeroError):
            is_enabled(net, net.initial_marking(), "t1")

    def test_negative_weight_disables(self):
        net = PetriNet(
            "neg",
            [PlaceDecl("p1", A, 5.0), PlaceDecl("p2", A, -3.0)],
            ["t1"],
            [Arc("p1", "t1", "m(p2)")],
        )
        assert not is_enabled(net, net.initial_marking(), "t1")

    def test_drain_requires_nonzero(self):
        net = PetriNet(
            "drain",
            [PlaceDecl("p1", A, 0.0)],
            ["t1"],
            [Arc("p1", "t1", "m(p1)", ArcKind.DRAIN)],
        )
        assert not is_enabled(net, [0.0], "t1")
        assert is_enabled(net, [1e-6], "t1")
        assert is_enabled(net, [-1e-6], "t1")


class TestFire:
    def test_measurement_fire_t1(self):
        net, _ = measurement_net()
        result = fire(net, net.initial_marking(), "t1")
        assert result == pytest.approx([0.0, 1.0 / math.sqrt(3.0), 0.0, 0.0])

    def test_entanglement_fire_t2(self):
        net = entanglement_net()
        assert fire(net, net.initial_marking(), "t2") == [0.0, 1.0, 0.0, 1.0, 0.0, 1.0]

    def test_zero_deposit_changes_nothing_but_inputs(self):
        net = PetriNet(
            "zero",
            [PlaceDecl("p1", C, 1), PlaceDecl("p2", A, 0.5)],
            ["t1"],
            [Arc("p1", "t1"), Arc("t1", "p2", "0")],
        )
        assert fire(net, net.initial_marking(), "t1") == [0.0, 0.5]

    def test_not_enabled_raises(self):
        net, _ = measurement_net()
        with pytest.raises(NotEnabledError):
            fire(net, [0.0, 0.0, 0.0, 0.0], "t1")

    def test_unknown_transition_raises(self):
        from qpn.errors import QpnError

        net, _ = measurement_net()
        with pytest.raises(QpnError):
            fire(net, net.initial_marking(), "t99")

    def test_wrong_dimension_raises(self):
        from qpn.errors import QpnError

        net, _ = measurement_net()
        with pytest.raises(QpnError):
            is_enabled(net, [1.0, 0.0], "t1")

    def test_input_is_not_mutated(self):
        net, _ = measurement_net()
        m0 = net.initial_marking()
        fire(net, m0, "t2")
        assert m0 == net.initial_marking()

    def test_guard_leaves_place_untouched(self):
        net = PetriNet(
            "guard",
            [PlaceDecl("p1", C, 3), PlaceDecl("p2", C, 0)],
            ["t1"],
            [Arc("p1", "t1", "2", ArcKind.GUARD), Arc("t1", "p2", "1")],
        )
        assert fire(net, net.initial_marking(), "t1") == [3.0, 1.0]

    def test_counter_violation_on_negative_deposit(self):
        net = PetriNet(
            "cv",
            [PlaceDecl("p1", C, 1), PlaceDecl("p2", C, 0)],
            ["t1"],
            [Arc("p1", "t1"), Arc("t1", "p2", "0-1")],
        )
        with pytest.raises(CounterViolationError):
            fire(net, net.initial_marking(), "t1")

    def test_counter_violation_on_fractional_deposit(self):
        net = PetriNet(
            "cv2",
            [PlaceDecl("p1", C, 1), PlaceDecl("p2", C, 0)],
            ["t1"],
            [Arc("p1", "t1"), Arc("t1", "p2", "1/2")],
        )
        with pytest.raises(CounterViolationError):
            fire(net, net.initial_marking(), "t1")

    def test_same_place_both_sides_uses_snapshot(self):
        # rewrite pattern: deposit m(p2)-m(p1) onto p1 sets it to m(p2)
        net = PetriNet(
            "swap",
            [PlaceDecl("p1", A, 0.75), PlaceDecl("p2", A, -0.25), PlaceDecl("c", C, 1)],
            ["t1"],
            [Arc("c", "t1"), Arc("t1", "p1", "m(p2)-m(p1)")],
        )
        assert fire(net, net.initial_marking(), "t1") == [-0.25, -0.25, 0.0]

    def test_consume_and_drain_on_same_place(self):
        # kind-grouped application: consume subtracts, then the drain zeroes,
        # regardless of arc declaration order
        for arcs in (
            [Arc("p1", "t1", "m(p1)", ArcKind.DRAIN), Arc("p1", "t1", "1")],
            [Arc("p1", "t1", "1"), Arc("p1", "t1", "m(p1)", ArcKind.DRAIN)],
        ):
            net = PetriNet("dc", [PlaceDecl("p1", A, 2.5)], ["t1"], arcs)
            assert fire(net, net.initial_marking(), "t1") == [0.0]


class TestConflictGroups:
    def test_measurement_single_group(self):
        net, _ = measurement_net()
        assert conflict_groups(net, net.initial_marking()) == [["t1", "t2", "t3"]]

    def test_entanglement_two_groups(self):
        net = entanglement_net()
        assert conflict_groups(net, net.initial_marking()) == [["t1", "t2"], ["t3", "t4"]]

    def test_singleton_group(self):
        net = PetriNet(
            "one",
            [PlaceDecl("p1", C, 1), PlaceDecl("p2", C, 0)],
            ["t1"],
            [Arc("p1", "t1"), Arc("t1", "p2")],
        )
        assert conflict_groups(net, net.initial_marking()) == [["t1"]]

    def test_guard_sharing_does_not_join(self):
        net = PetriNet(
            "guards",
            [PlaceDecl("g", C, 1), PlaceDecl("a", C, 1), PlaceDecl("b", C, 1)],
            ["t1", "t2"],
            [
                Arc("g", "t1", "1", ArcKind.GUARD),
                Arc("g", "t2", "1", ArcKind.GUARD),
                Arc("a", "t1"),
                Arc("b", "t2"),
            ],
        )
        assert conflict_groups(net, net.initial_marking()) == [["t1"], ["t2"]]


class TestStep:
    def test_quiescent_returns_none(self):
        net, _ = measurement_net()
        assert step(net, [0.0, 0.0, 0.0, 0.0], RunConfig(), random.Random(0)) is None

    def test_deterministic_picks_lowest_rank(self):
        net = entanglement_net()
        tid, m = step(net, net.initial_marking(), RunConfig(), random.Random(0))
        assert tid == "t1"
        assert m == [0.0, 1.0, 1.0, 0.0, 1.0, 0.0]

    def test_priority_overrides_ordinal(self):
        net = PetriNet(
            "prio",
            [PlaceDecl("p1", C, 1), PlaceDecl("p2", C), PlaceDecl("p3", C)],
            [TransitionDecl("t1", priority=5), TransitionDecl("t2", priority=1)],
            [Arc("p1", "t1"), Arc("t1", "p2"), Arc("p1", "t2"), Arc("t2", "p3")],
        )
        tid, _ = step(net, net.initial_marking(), RunConfig(), random.Random(0))
        assert tid == "t2"

    def test_single_enabled_fires_under_both_policies(self):
        net = PetriNet(
            "single",
            [PlaceDecl("p1", C, 1), PlaceDecl("p2", A)],
            ["t1"],
            [Arc("p1", "t1"), Arc("t1", "p2", "1/sqrt(2)")],
        )
        for policy in (Policy.DETERMINISTIC_PRIORITY, Policy.BORN_RANDOM):
            tid, _ = step(net, net.initial_marking(), RunConfig(policy=policy), random.Random(1))
            assert tid == "t1"

    def test_same_seed_same_choices(self):
        net, _ = measurement_net()
        config = RunConfig(policy=Policy.BORN_RANDOM, seed=1234)
        picks_a = [step(net, net.initial_marking(), config, random.Random(s))[0] for s in range(50)]
        picks_b = [step(net, net.initial_marking(), config, random.Random(s))[0] for s in range(50)]
        assert picks_a == picks_b
        assert len(set(picks_a)) == 3  # all branches show up over 50 seeds

    def test_zero_weight_group(self):
        net = PetriNet(
            "zwg",
            [PlaceDecl("p1", C, 1), PlaceDecl("p2", A)],
            ["t1", "t2"],
            [Arc("p1", "t1"), Arc("p1", "t2"), Arc("t1", "p2", "0"), Arc("t2", "p2", "0")],
        )
        with pytest.raises(ZeroWeightGroupError):
            step(net, net.initial_marking(), RunConfig(policy=Policy.BORN_RANDOM), random.Random(0))


class TestRun:
    def test_entanglement_deterministic_two_firings(self):
        net = entanglement_net()
        trace = run(net, net.initial_marking(), RunConfig())
        assert trace.status == TerminalStatus.QUIESCENT
        assert len(trace.steps) == 2
        assert trace.fired() == ["t1", "t3"]
        assert trace.final == [0.0, 0.0, 2.0, 0.0, 2.0, 0.0]

    def test_zeno_n4_final_probability(self):
        net, mapping = zeno_net(ProtocolParams(N=4))
        trace = run(net, net.initial_marking(), RunConfig(max_steps=100))
        assert trace.status == TerminalStatus.QUIESCENT
        p11 = trace.final[net.place_index["p11"]]
        assert mapping.k * p11**2 == pytest.approx(math.cos(math.pi / 8) ** 8, abs=1e-12)
        assert mapping.k * p11**2 == pytest.approx(0.530790, abs=1e-6)

    def test_empty_run(self):
        net = PetriNet("places-only", [PlaceDecl("p1", C, 1)], [], [])
        trace = run(net, net.initial_marking(), RunConfig())
        assert trace.status == TerminalStatus.QUIESCENT
        assert trace.steps == ()
        assert trace.final == [1.0]

    def test_step_limit_status(self):
        net = PetriNet(
            "loop",
            [PlaceDecl("p1", C, 1)],
            ["t1"],
            [Arc("p1", "t1"), Arc("t1", "p1")],
        )
        trace = run(net, net.initial_marking(), RunConfig(max_steps=7))
        assert trace.status == TerminalStatus.STEP_LIMIT
        assert len(trace.steps) == 7

    def test_step_error_carries_index(self):
        net = PetriNet(
            "err",
            [PlaceDecl("p1", C, 1), PlaceDecl("p2", C, 0), PlaceDecl("p3", C, 0)],
            ["t1", "t2"],
            [
                Arc("p1", "t1"),
                Arc("t1", "p2"),
                Arc("p2", "t2"),
                Arc("t2", "p3", "0-1"),
            ],
        )
        with pytest.raises(CounterViolationError) as err:
            run(net, net.initial_marking(), RunConfig())
        assert err.value.step_index == 1

    def test_trace_markings_chain_by_fire(self):
        net, _ = measurement_net()
        trace = run(net, net.initial_marking(), RunConfig(policy=Policy.BORN_RANDOM, seed=5))
        previous = trace.initial
        for tid, marking in trace.steps:
            assert is_enabled(net, previous, tid)
            assert fire(net, previous, tid) == marking
            previous = marking

    def test_reproducibility_bit_identical(self):
        net, _ = measurement_net()
        config = RunConfig(policy=Policy.BORN_RANDOM, seed=99, max_steps=10)
        assert run(net, net.initial_marking(), config) == run(net, net.initial_marking(), config)

    def test_counter_integrality_preserved(self):
        net = entanglement_net()
        trace = run(net, net.initial_marking(), RunConfig(policy=Policy.BORN_RANDOM, seed=3))
        for _, marking in trace.steps:
            for value in marking:
                assert abs(value - round(value)) <= 1e-9 and value >= -1e-9


class TestDepositAdditivity:
    def _two_depositors(self, w1: str, w2: str) -> PetriNet:
        return PetriNet(
            "dep",
            [PlaceDecl("a", C, 1), PlaceDecl("b", C, 1), PlaceDecl("x", A, 0.0)],
            ["t1", "t2"],
            [Arc("a", "t1"), Arc("t1", "x", w1), Arc("b", "t2"), Arc("t2", "x", w2)],
        )

    def test_sum_of_snapshot_deposits(self):
        net = self._two_depositors("0.5", "m(x)+0.25")
        m1 = fire(net, net.initial_marking(), "t1")
        d1 = 0.5
        m2 = fire(net, m1, "t2")
        d2 = m1[2] + 0.25
        assert m2[2] == pytest.approx(0.0 + d1 + d2)

    def test_constant_weights_commute(self):
        net = self._two_depositors("0.5", "0.25")
        m0 = net.initial_marking()
        forward = fire(net, fire(net, m0, "t1"), "t2")
        backward = fire(net, fire(net, m0, "t2"), "t1")
        assert forward[2] == backward[2] == 0.75


class TestBornFrequency:
    def test_measurement_frequencies_within_4_sigma(self):
        net, _ = measurement_net()
        runs = 100_000
        counts = {"t1": 0, "t2": 0, "t3": 0}
        m0 = net.initial_marking()
        config = RunConfig(policy=Policy.BORN_RANDOM, seed=0)
        for i in range(runs):
            tid, _ = step(net, m0, config, random.Random(i))
            counts[tid] += 1
        p = 1.0 / 3.0
        sigma = math.sqrt(p * (1 - p) / runs)
        for tid, count in counts.items():
            assert abs(count / runs - p) <= 4 * sigma, (tid, count / runs)


class TestRunStepEquivalence:
    """run() is literally "repeat step until quiescence": same rng, same trace."""

    def _manual_trace(self, net, m0, config):
        rng = random.Random(config.seed)
        m = list(m0)
        steps = []
        for _ in range(config.max_steps):
            result = step(net, m, config, rng)
            if result is None:
                return steps, TerminalStatus.QUIESCENT
            tid, m = result
            steps.append((tid, m))
        return steps, (
            TerminalStatus.QUIESCENT
            if step(net, m, config, rng.__class__(0)) is None
            else TerminalStatus.STEP_LIMIT
        )

    def _net_with_singleton_then_conflict(self):
        # one forced firing, then a two-way conflict: exposes any rng-draw
        # mismatch between the run engine and a manual step loop
        return PetriNet(
            "mix",
            [
                PlaceDecl("start", C, 1),
                PlaceDecl("mid", C, 0),
                PlaceDecl("left", A, 0.0),
                PlaceDecl("right", A, 0.0),
            ],
            ["go", "a", "b"],
            [
                Arc("start", "go"),
                Arc("go", "mid"),
                Arc("mid", "a"),
                Arc("mid", "b"),
                Arc("a", "left", "0.6"),
                Arc("b", "right", "0.8"),
            ],
        )

    @pytest.mark.parametrize("seed", range(12))
    def test_born_run_equals_step_loop(self, seed):
        net = self._net_with_singleton_then_conflict()
        config = RunConfig(policy=Policy.BORN_RANDOM, seed=seed, max_steps=50)
        trace = run(net, net.initial_marking(), config)
        manual_steps, manual_status = self._manual_trace(net, net.initial_marking(), config)
        assert list(trace.steps) == manual_steps
        assert trace.status == manual_status

    @pytest.mark.parametrize("policy", [Policy.DETERMINISTIC_PRIORITY, Policy.BORN_RANDOM])
    def test_protocol_and_model_nets(self, policy):
        nets = [measurement_net()[0], entanglement_net(), zeno_net(ProtocolParams(N=5))[0]]
        for net in nets:
            config = RunConfig(policy=policy, seed=17, max_steps=200)
            trace = run(net, net.initial_marking(), config)
            manual_steps, _ = self._manual_trace(net, net.initial_marking(), config)
            assert list(trace.steps) == manual_steps


class TestSchedulerDependencies:
    """Enablement hinging on a place referenced only inside a weight expression."""

    def test_weight_dependency_rechecked(self):
        # t2 consumes from src with weight m(gate): enabled only once t1 has
        # lowered gate below the src level; gate is not an input place of t2
        net = PetriNet(
            "weightdep",
            [
                PlaceDecl("tick", C, 1),
                PlaceDecl("gate", A, 99.0),
                PlaceDecl("src", A, 1.0),
                PlaceDecl("out", A, 0.0),
            ],
            ["t1", "t2"],
            [
                Arc("tick", "t1"),
                Arc("t1", "gate", "1-m(gate)"),  # rewrites gate to 1.0
                Arc("src", "t2", "m(gate)"),
                Arc("t2", "out", "1"),
            ],
        )
        trace = run(net, net.initial_marking(), RunConfig(max_steps=10))
        assert trace.fired() == ["t1", "t2"]
        assert trace.final[net.place_index["out"]] == 1.0
        assert trace.status == TerminalStatus.QUIESCENT


# --- firing atomicity property over random nets ------------------------------------

_WEIGHTS = ("1", "2", "0.5", "m(q0)", "m(q1)+1", "cos(m(q2))", "m(q0)*m(q1)", "0-m(q3)")


@st.composite
def _random_net_and_marking(draw):
    n_places = draw(st.integers(min_value=2, max_value=4))
    places = [PlaceDecl(f"q{i}", A, 0.0) for i in range(4)]
    n_trans = draw(st.integers(min_value=1, max_value=3))
    arcs = []
    for t in range(n_trans):
        for _ in range(draw(st.integers(min_value=0, max_value=2))):
            src = f"q{draw(st.integers(0, n_places - 1))}"
            kind = draw(st.sampled_from([ArcKind.CONSUME, ArcKind.GUARD, ArcKind.DRAIN]))
            weight = f"m({src})" if kind == ArcKind.DRAIN else draw(st.sampled_from(_WEIGHTS))
            arcs.append(Arc(src, f"t{t}", weight, kind))
        for _ in range(draw(st.integers(min_value=0, max_value=3))):
            dst = f"q{draw(st.integers(0, n_places - 1))}"
            arcs.append(Arc(f"t{t}", dst, draw(st.sampled_from(_WEIGHTS))))
    net = PetriNet("rand", places, [f"t{t}" for t in range(n_trans)], arcs)
    marking = draw(
        st.lists(
            st.floats(min_value=-8.0, max_value=8.0, allow_nan=False), min_size=4, max_size=4
        )
    )
    return net, marking


@settings(max_examples=200, deadline=None)
@given(_random_net_and_marking())
def test_firing_atomicity(net_and_marking):
    """fire() equals the marking computed with all weights read pre-fire."""
    net, marking = net_and_marking
    for tid in net.transition_ids():
        if not is_enabled(net, marking, tid):
            continue
        assert fire(net, marking, tid) == pytest.approx(manual_fire(net, marking, tid), abs=1e-12)


@settings(max_examples=150, deadline=None)
@given(
    _random_net_and_marking(),
    st.integers(min_value=0, max_value=2**16),
    st.booleans(),
)
def test_run_engine_equals_step_loop_on_random_nets(net_and_marking, seed, born):
    """The incremental run engine and a naive step() loop never disagree."""
    from qpn.errors import QpnError

    net, marking = net_and_marking
    policy = Policy.BORN_RANDOM if born else Policy.DETERMINISTIC_PRIORITY
    config = RunConfig(policy=policy, seed=seed, max_steps=12)

    def manual():
        rng = random.Random(seed)
        m = list(marking)
        steps = []
        for _ in range(config.max_steps):
            result = step(net, m, config, rng)
            if result is None:
                return steps, TerminalStatus.QUIESCENT
            steps.append(result)
            m = result[1]
        return steps, TerminalStatus.STEP_LIMIT

    try:
        trace = run(net, marking, config)
    except QpnError as e:
        with pytest.raises(type(e)):
            manual()
        return
    steps, status = manual()
    assert list(trace.steps) == steps
    if status == TerminalStatus.QUIESCENT:
        assert trace.status == TerminalStatus.QUIESCENT
