"""Petri-net structure and execution.

Places carry real-valued token counts.  ``Counter`` places keep classical
semantics (non-negative integers); ``Amplitude`` places hold signed reals so a
token count can encode a probability amplitude.  Arc weights are expressions
over the current marking (see :mod:`qpn.expr`), evaluated against the pre-fire
snapshot, which makes each firing atomic.

Input arc kinds:

* ``CONSUME`` - requires m(p) >= w and subtracts w;
* ``GUARD``   - same enabling test, leaves the place untouched;
* ``DRAIN``   - requires |m(p)| > eps and sets the place to zero; its weight
  expression is always exactly ``m(<place>)``.

A :class:`PetriNet` is immutable after construction and can be shared across
threads; each run owns its marking and RNG exclusively.
"""

from __future__ import annotations

import enum
import math
import random
from dataclasses import dataclass, replace
from typing import Callable, Iterable, Sequence

from . import expr as _expr
from .errors import (
    CounterViolationError,
    DeterminismViolationError,
    EvaluationError,
    NegativeSqrtError,
    NetDefinitionError,
    NonFiniteResultError,
    NotEnabledError,
    DivisionByZeroError,
    QpnError,
    ZeroWeightGroupError,
)
from .expr import WeightExpr

__all__ = [
    "PlaceKind",
    "ArcKind",
    "Policy",
    "TerminalStatus",
    "PlaceDecl",
    "TransitionDecl",
    "Arc",
    "PetriNet",
    "Marking",
    "RunConfig",
    "Trace",
    "FinalState",
    "EPSILON_INT",
    "is_enabled",
    "enabled_transitions",
    "fire",
    "conflict_groups",
    "step",
    "run",
    "run_final",
    "marking_env",
    "validate_marking",
]

Marking = list[float]

EPSILON_INT = 1e-9  # integrality tolerance for counter places


class PlaceKind(enum.Enum):
    COUNTER = "counter"
    AMPLITUDE = "amplitude"


class ArcKind(enum.Enum):
    CONSUME = "consume"
    DRAIN = "drain"
    GUARD = "guard"
    DEPOSIT = "deposit"


class Policy(enum.Enum):
    DETERMINISTIC_PRIORITY = "det"
    BORN_RANDOM = "born"


class TerminalStatus(enum.Enum):
    QUIESCENT = "quiescent"
    STEP_LIMIT = "step_limit"


@dataclass(frozen=True)
class PlaceDecl:
    id: str
    kind: PlaceKind = PlaceKind.COUNTER
    initial: float = 0.0


@dataclass(frozen=True)
class TransitionDecl:
    id: str
    priority: int = 0


@dataclass(frozen=True)
class Arc:
    """Directed arc; direction is inferred from the endpoint ids.

    ``weight`` accepts expression text or a parsed tree.  ``kind`` may be left
    None for the default (CONSUME on input arcs, DEPOSIT on output arcs).
    """

    source: str
    target: str
    weight: WeightExpr | str = "1"
    kind: ArcKind | None = None

    def parsed_weight(self) -> WeightExpr:
        if isinstance(self.weight, str):
            return _expr.parse(self.weight)
        return self.weight


@dataclass(frozen=True)
class RunConfig:
    policy: Policy = Policy.DETERMINISTIC_PRIORITY
    seed: int = 0
    max_steps: int = 1_000_000
    epsilon: float = 1e-12

    def __post_init__(self) -> None:
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if not (self.epsilon > 0):
            raise ValueError("epsilon must be > 0")
        if not (0 <= self.seed < 2**64):
            raise ValueError("seed must fit in 64 bits")


@dataclass(frozen=True)
class Trace:
    initial: Marking
    steps: tuple[tuple[str, Marking], ...]
    status: TerminalStatus

    @property
    def final(self) -> Marking:
        return self.steps[-1][1] if self.steps else self.initial

    def fired(self) -> list[str]:
        return [tid for tid, _ in self.steps]


@dataclass(frozen=True)
class FinalState:
    """Result of a run that does not record intermediate markings."""

    marking: Marking
    firings: int
    status: TerminalStatus


class PetriNet:
    """Immutable net: ordered places/transitions, arcs with expression weights."""

    def __init__(
        self,
        name: str,
        places: Iterable[PlaceDecl],
        transitions: Iterable[TransitionDecl | str],
        arcs: Iterable[Arc],
    ):
        self.name = name
        self.places: tuple[PlaceDecl, ...] = tuple(places)
        self.transitions: tuple[TransitionDecl, ...] = tuple(
            t if isinstance(t, TransitionDecl) else TransitionDecl(t) for t in transitions
        )
        self.place_index: dict[str, int] = {p.id: i for i, p in enumerate(self.places)}
        self.transition_index: dict[str, int] = {t.id: i for i, t in enumerate(self.transitions)}
        self.arcs: tuple[Arc, ...] = tuple(self._normalize(a) for a in arcs)
        self._validate()
        self._compiled: _CompiledNet | None = None

    # -- construction helpers --------------------------------------------------

    def _normalize(self, arc: Arc) -> Arc:
        weight = arc.parsed_weight()
        src_is_place = arc.source in self.place_index
        src_is_trans = arc.source in self.transition_index
        dst_is_place = arc.target in self.place_index
        dst_is_trans = arc.target in self.transition_index
        if src_is_place and dst_is_trans:
            kind = arc.kind or ArcKind.CONSUME
            if kind == ArcKind.DEPOSIT:
                raise NetDefinitionError(f"input arc {arc.source}->{arc.target} cannot be a deposit")
            if kind == ArcKind.DRAIN and weight != _expr.MarkRef(arc.source):
                raise NetDefinitionError(
                    f"drain arc {arc.source}->{arc.target} must have weight m({arc.source})"
                )
        elif src_is_trans and dst_is_place:
            if arc.kind not in (None, ArcKind.DEPOSIT):
                raise NetDefinitionError(
                    f"output arc {arc.source}->{arc.target} must be a deposit, got {arc.kind}"
                )
            kind = ArcKind.DEPOSIT
        else:
            raise NetDefinitionError(
                f"arc {arc.source}->{arc.target} does not connect a declared place and transition"
            )
        return replace(arc, weight=weight, kind=kind)

    def _validate(self) -> None:
        if not self.places and not self.transitions:
            raise NetDefinitionError("net is empty")
        if len(self.place_index) != len(self.places):
            raise NetDefinitionError("duplicate place ids")
        if len(self.transition_index) != len(self.transitions):
            raise NetDefinitionError("duplicate transition ids")
        overlap = self.place_index.keys() & self.transition_index.keys()
        if overlap:
            raise NetDefinitionError(f"ids used for both places and transitions: {sorted(overlap)}")
        for p in self.places:
            if not math.isfinite(p.initial):
                raise NetDefinitionError(f"place {p.id} has non-finite initial value")
            if p.kind == PlaceKind.COUNTER:
                if p.initial < 0 or p.initial != int(p.initial):
                    raise NetDefinitionError(
                        f"counter place {p.id} must start at a non-negative integer, got {p.initial}"
                    )
        for arc in self.arcs:
            for ref in _expr.free_places(arc.parsed_weight()):
                if ref not in self.place_index:
                    raise NetDefinitionError(
                        f"arc {arc.source}->{arc.target} references undeclared place {ref}"
                    )

    # -- views -------------------------------------------------------------------

    def place_ids(self) -> list[str]:
        return [p.id for p in self.places]

    def transition_ids(self) -> list[str]:
        return [t.id for t in self.transitions]

    def initial_marking(self) -> Marking:
        return [float(p.initial) for p in self.places]

    def input_arcs(self, transition_id: str) -> list[Arc]:
        return [a for a in self.arcs if a.target == transition_id]

    def output_arcs(self, transition_id: str) -> list[Arc]:
        return [a for a in self.arcs if a.source == transition_id]

    def compiled(self) -> "_CompiledNet":
        if self._compiled is None:
            self._compiled = _CompiledNet(self)
        return self._compiled

    def __repr__(self) -> str:
        return (
            f"PetriNet({self.name!r}, |P|={len(self.places)}, "
            f"|T|={len(self.transitions)}, |F|={len(self.arcs)})"
        )

    def __eq__(self, other: object) -> bool:
        """Structural equality: same declarations and arcs in the same order."""
        if not isinstance(other, PetriNet):
            return NotImplemented
        return (
            self.name == other.name
            and self.places == other.places
            and self.transitions == other.transitions
            and self.arcs == other.arcs
        )


# --- marking helpers -------------------------------------------------------------


class _MarkingEnv:
    """Read-only place-id -> value view over a dense marking vector."""

    __slots__ = ("_index", "_m")

    def __init__(self, index: dict[str, int], m: Sequence[float]):
        self._index = index
        self._m = m

    def __getitem__(self, place_id: str) -> float:
        return self._m[self._index[place_id]]


def marking_env(net: PetriNet, m: Sequence[float]) -> _MarkingEnv:
    return _MarkingEnv(net.place_index, m)


def validate_marking(net: PetriNet, m: Sequence[float]) -> None:
    _check_dimension(net, m)
    for place, value in zip(net.places, m):
        if not math.isfinite(value):
            raise QpnError(f"marking of {place.id} is not finite: {value!r}")
        if place.kind == PlaceKind.COUNTER:
            if value < -EPSILON_INT or abs(value - round(value)) > EPSILON_INT:
                raise CounterViolationError(
                    f"counter place {place.id} holds {value!r}, expected a non-negative integer"
                )


# --- compiled engine ---------------------------------------------------------------

_CONSUME, _DRAIN, _GUARD = 0, 1, 2
_KIND_CODE = {ArcKind.CONSUME: _CONSUME, ArcKind.DRAIN: _DRAIN, ArcKind.GUARD: _GUARD}


def _raise_nonfinite(tid: str) -> None:
    raise NonFiniteResultError(f"a weight of transition {tid} evaluated to a non-finite value")


def _raise_counter(tid: str, place_id: str, value: float) -> None:
    raise CounterViolationError(f"firing {tid} left counter place {place_id} at {value!r}")


class _CompiledTransition:
    __slots__ = (
        "tid",
        "ordinal",
        "rank",
        "inputs",
        "outputs",
        "dep_places",
        "touched",
        "conflict_places",
        "in_exprs",
        "out_exprs",
        "fast_enabled",
        "fast_fire",
        "recheck",
    )

    def __init__(self, tid: str, ordinal: int, rank: int):
        self.tid = tid
        self.ordinal = ordinal
        self.rank = rank
        # inputs: (place_idx, kind_code, weight_fn, arc_label)
        self.inputs: list[tuple[int, int, Callable, str]] = []
        # outputs: (place_idx, weight_fn, arc_label)
        self.outputs: list[tuple[int, Callable, str]] = []
        self.in_exprs: list[tuple[int, int, str]] = []   # (place_idx, kind_code, emitted source)
        self.out_exprs: list[tuple[int, str]] = []       # (place_idx, emitted source)
        self.dep_places: set[int] = set()       # places whose change can flip enablement
        self.touched: list[int] = []            # places this transition may modify
        self.conflict_places: set[int] = set()  # consume/drain inputs, for conflict grouping
        self.fast_enabled: Callable | None = None
        self.fast_fire: Callable | None = None
        self.recheck: tuple[int, ...] = ()


class _CompiledNet:
    """Per-transition closures and adjacency used by every execution path."""

    def __init__(self, net: PetriNet):
        self.net = net
        self.n_places = len(net.places)
        index = net.place_index
        self.is_counter = [p.kind == PlaceKind.COUNTER for p in net.places]
        self.trans: list[_CompiledTransition] = [
            _CompiledTransition(t.id, i, t.priority) for i, t in enumerate(net.transitions)
        ]
        for arc in net.arcs:
            weight = arc.parsed_weight()
            fn = _expr.compile_fn(weight, index)
            source = _expr._emit(weight, index)
            label = f"{arc.source}->{arc.target} w={_expr.format_expr(weight)}"
            refs = {index[p] for p in _expr.free_places(weight)}
            if arc.kind == ArcKind.DEPOSIT:
                ct = self.trans[net.transition_index[arc.source]]
                p = index[arc.target]
                ct.outputs.append((p, fn, label))
                ct.out_exprs.append((p, source))
                if p not in ct.touched:
                    ct.touched.append(p)
            else:
                ct = self.trans[net.transition_index[arc.target]]
                p = index[arc.source]
                ct.inputs.append((p, _KIND_CODE[arc.kind], fn, label))
                ct.in_exprs.append((p, _KIND_CODE[arc.kind], source))
                ct.dep_places.add(p)
                ct.dep_places.update(refs)
                if arc.kind != ArcKind.GUARD:
                    ct.conflict_places.add(p)
                    if p not in ct.touched:
                        ct.touched.append(p)
        # firing order under deterministic priority
        self.order = sorted(range(len(self.trans)), key=lambda i: (self.trans[i].rank, i))
        self.uniform_rank = len({t.rank for t in self.trans}) <= 1
        self.dependents: list[list[int]] = [[] for _ in range(self.n_places)]
        for ct in self.trans:
            for p in sorted(ct.dep_places):
                self.dependents[p].append(ct.ordinal)
        for ct in self.trans:
            seen: list[int] = []
            for p in ct.touched:
                for tj in self.dependents[p]:
                    if tj not in seen:
                        seen.append(tj)
            ct.recheck = tuple(seen)
            ct.fast_enabled = self._gen_enabled(ct)
            ct.fast_fire = self._gen_fire(ct)

    # -- fused per-transition code ------------------------------------------------
    #
    # One code object per transition for the hot simulation loop.  Weight
    # evaluation happens before any mutation, so a runtime fault from the fast
    # path leaves the marking intact and the caller can re-run the careful
    # path for a precise error.  `w - w != 0.0` is a cheap non-finiteness test
    # (true for nan and both infinities).

    def _gen_enabled(self, ct: _CompiledTransition) -> Callable:
        lines = ["def _enabled(m, eps):"]
        for i, (p, kind, source) in enumerate(ct.in_exprs):
            if kind == _DRAIN:
                lines.append(f"    if -eps <= m[{p}] <= eps: return False")
            else:
                lines.append(f"    w{i} = {source}")
                lines.append(f"    if w{i} - w{i} != 0.0: _nonfinite({ct.tid!r})")
                lines.append(f"    if not (w{i} >= 0.0 and m[{p}] >= w{i} - eps): return False")
        lines.append("    return True")
        return self._build(lines, "_enabled")

    def _gen_fire(self, ct: _CompiledTransition) -> Callable:
        lines = ["def _fire(m):"]
        consumes: list[tuple[int, int]] = []
        drains: list[int] = []
        for i, (p, kind, source) in enumerate(ct.in_exprs):
            if kind == _DRAIN:
                drains.append(p)
            elif kind == _CONSUME:
                lines.append(f"    w{i} = {source}")
                lines.append(f"    if w{i} - w{i} != 0.0: _nonfinite({ct.tid!r})")
                consumes.append((p, i))
        for j, (p, source) in enumerate(ct.out_exprs):
            lines.append(f"    v{j} = {source}")
            lines.append(f"    if v{j} - v{j} != 0.0: _nonfinite({ct.tid!r})")
        for p, i in consumes:
            lines.append(f"    m[{p}] -= w{i}")
        for p in drains:
            lines.append(f"    m[{p}] = 0.0")
        for j, (p, _) in enumerate(ct.out_exprs):
            lines.append(f"    m[{p}] += v{j}")
        for p in ct.touched:
            if self.is_counter[p]:
                pid = self.net.places[p].id
                lines.append(f"    c = m[{p}]; r = _round(c); d = c - r")
                lines.append(
                    f"    if c < -1e-9 or d > 1e-9 or d < -1e-9: _counterfail({ct.tid!r}, {pid!r}, c)"
                )
                lines.append(f"    m[{p}] = r + 0.0")
        if len(lines) == 1:
            lines.append("    pass")
        return self._build(lines, "_fire")

    @staticmethod
    def _build(lines: list[str], name: str) -> Callable:
        namespace = dict(_expr._COMPILE_GLOBALS)
        namespace["_round"] = round
        namespace["_nonfinite"] = _raise_nonfinite
        namespace["_counterfail"] = _raise_counter
        exec("\n".join(lines), namespace)  # noqa: S102 - source built from our own AST
        return namespace[name]

    # -- enablement ------------------------------------------------------------

    def enabled(self, ti: int, m: Sequence[float], eps: float) -> bool:
        for p, kind, fn, label in self.trans[ti].inputs:
            if kind == _DRAIN:
                if not (abs(m[p]) > eps):
                    return False
            else:
                w = self._eval(fn, m, label)
                if not (w >= 0.0 and m[p] >= w - eps):
                    return False
        return True

    @staticmethod
    def _eval(fn: Callable, m: Sequence[float], label: str) -> float:
        try:
            w = fn(m)
        except ZeroDivisionError:
            raise DivisionByZeroError(f"division by zero evaluating arc {label}") from None
        except ValueError as e:
            # math.sqrt / math.pow domain faults both land here
            raise NegativeSqrtError(f"domain error evaluating arc {label}: {e}") from None
        except OverflowError:
            raise NonFiniteResultError(f"overflow evaluating arc {label}") from None
        if not math.isfinite(w):
            raise NonFiniteResultError(f"arc {label} evaluated to {w!r}")
        return w

    # -- firing -------------------------------------------------------------------

    def fire_into(self, ti: int, m: Marking) -> list[int]:
        """Apply one firing in place; returns the indices of modified places.

        All weights are evaluated against the marking as it was on entry, so
        the update is atomic even when a place appears on both sides.  Updates
        apply kind by kind: consumes subtract, then drains zero, then deposits
        add.
        """
        ct = self.trans[ti]
        consumes: list[tuple[int, float]] = []
        drains: list[int] = []
        for p, kind, fn, label in ct.inputs:
            if kind == _DRAIN:
                drains.append(p)
            elif kind == _CONSUME:
                consumes.append((p, self._eval(fn, m, label)))
        out_deltas = [(p, self._eval(fn, m, label)) for p, fn, label in ct.outputs]
        for p, w in consumes:
            m[p] -= w
        for p in drains:
            m[p] = 0.0
        for p, w in out_deltas:
            m[p] += w
        for p in ct.touched:
            if self.is_counter[p]:
                v = m[p]
                if v < -EPSILON_INT or abs(v - round(v)) > EPSILON_INT:
                    raise CounterViolationError(
                        f"firing {ct.tid} left counter place "
                        f"{self.net.places[p].id} at {v!r}"
                    )
                m[p] = float(round(v))
        return ct.touched


# --- public operations ---------------------------------------------------------------


def _transition_ordinal(net: PetriNet, transition_id: str) -> int:
    try:
        return net.transition_index[transition_id]
    except KeyError:
        raise QpnError(f"net {net.name!r} declares no transition {transition_id!r}") from None


def _check_dimension(net: PetriNet, m: Sequence[float]) -> None:
    if len(m) != len(net.places):
        raise QpnError(f"marking has {len(m)} entries, net has {len(net.places)} places")


def is_enabled(net: PetriNet, m: Sequence[float], transition_id: str, epsilon: float = 1e-12) -> bool:
    """Enabling test; expression failures raise rather than answer False."""
    _check_dimension(net, m)
    return net.compiled().enabled(_transition_ordinal(net, transition_id), m, epsilon)


def enabled_transitions(net: PetriNet, m: Sequence[float], epsilon: float = 1e-12) -> list[str]:
    _check_dimension(net, m)
    cnet = net.compiled()
    return [ct.tid for ct in cnet.trans if cnet.enabled(ct.ordinal, m, epsilon)]


def fire(net: PetriNet, m: Sequence[float], transition_id: str, epsilon: float = 1e-12) -> Marking:
    """One atomic firing; returns the successor marking, input untouched."""
    _check_dimension(net, m)
    cnet = net.compiled()
    ti = _transition_ordinal(net, transition_id)
    if not cnet.enabled(ti, m, epsilon):
        raise NotEnabledError(f"transition {transition_id} is not enabled")
    out = list(m)
    cnet.fire_into(ti, out)
    return out


def conflict_groups(net: PetriNet, m: Sequence[float], epsilon: float = 1e-12) -> list[list[str]]:
    """Partition of the enabled transitions by shared consume/drain places.

    Transitions that only share guard places land in different groups.  Groups
    are ordered by their lowest (priority, ordinal) member; members by ordinal.
    """
    _check_dimension(net, m)
    cnet = net.compiled()
    enabled = [ct.ordinal for ct in cnet.trans if cnet.enabled(ct.ordinal, m, epsilon)]
    return [[cnet.trans[i].tid for i in group] for group in _group_ordinals(cnet, enabled)]


def _group_ordinals(cnet: _CompiledNet, enabled: list[int]) -> list[list[int]]:
    parent = {t: t for t in enabled}

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    by_place: dict[int, int] = {}
    for t in enabled:
        for p in cnet.trans[t].conflict_places:
            if p in by_place:
                ra, rb = find(by_place[p]), find(t)
                if ra != rb:
                    parent[rb] = ra
            else:
                by_place[p] = t
    clusters: dict[int, list[int]] = {}
    for t in enabled:
        clusters.setdefault(find(t), []).append(t)
    groups = [sorted(members) for members in clusters.values()]
    groups.sort(key=lambda g: min((cnet.trans[t].rank, t) for t in g))
    return groups


def _born_choice(cnet: _CompiledNet, m: Sequence[float], enabled: list[int], rng: random.Random) -> int:
    groups = _group_ordinals(cnet, enabled)
    lead = min(enabled, key=lambda t: (cnet.trans[t].rank, t))
    group = next(g for g in groups if lead in g)
    members = sorted(group, key=lambda t: (cnet.trans[t].rank, t))
    weights = []
    for t in members:
        ct = cnet.trans[t]
        total = 0.0
        for p, fn, label in ct.outputs:
            w = cnet._eval(fn, m, label)
            total += w * w
        weights.append(total)
    total = sum(weights)
    if total <= 0.0:
        raise ZeroWeightGroupError(
            f"conflict group {[cnet.trans[t].tid for t in members]} has zero total squared output weight"
        )
    draw = rng.random() * total
    acc = 0.0
    for t, w in zip(members, weights):
        acc += w
        if draw < acc:
            return t
    return members[-1]


def step(
    net: PetriNet,
    m: Sequence[float],
    config: RunConfig,
    rng: random.Random,
) -> tuple[str, Marking] | None:
    """Fire one transition per the configured policy; None when quiescent."""
    _check_dimension(net, m)
    cnet = net.compiled()
    enabled = [ct.ordinal for ct in cnet.trans if cnet.enabled(ct.ordinal, m, config.epsilon)]
    if not enabled:
        return None
    if config.policy == Policy.DETERMINISTIC_PRIORITY:
        ti = min(enabled, key=lambda t: (cnet.trans[t].rank, t))
    else:
        ti = _born_choice(cnet, m, enabled, rng)
    out = list(m)
    cnet.fire_into(ti, out)
    return cnet.trans[ti].tid, out


def run(net: PetriNet, m0: Sequence[float], config: RunConfig) -> Trace:
    """Apply step() until quiescence or max_steps, recording every firing."""
    steps: list[tuple[str, Marking]] = []
    final = _execute(net, m0, config, on_fire=lambda tid, m: steps.append((tid, list(m))))
    return Trace(initial=list(m0), steps=tuple(steps), status=final.status)


def run_final(
    net: PetriNet,
    m0: Sequence[float],
    config: RunConfig,
    require_single_enabled: bool = False,
) -> FinalState:
    """Memory-lean run: final marking and firing count, no per-step record.

    With ``require_single_enabled`` the run asserts that at most one
    transition is enabled before every firing (conflict-free execution).
    """
    return _execute(net, m0, config, require_single_enabled=require_single_enabled)


def _execute(
    net: PetriNet,
    m0: Sequence[float],
    config: RunConfig,
    on_fire: Callable[[str, Marking], None] | None = None,
    require_single_enabled: bool = False,
) -> FinalState:
    validate_marking(net, m0)
    cnet = net.compiled()
    m = [float(v) for v in m0]
    eps = config.epsilon
    rng = random.Random(config.seed)
    deterministic = config.policy == Policy.DETERMINISTIC_PRIORITY
    simple_order = cnet.uniform_rank  # priority order == ordinal order

    trans = cnet.trans
    n_trans = len(trans)
    flags = bytearray(n_trans)
    count = 0
    for ti in range(n_trans):
        if _checked_enabled(cnet, ti, m, eps, 0):
            flags[ti] = 1
            count += 1

    firings = 0
    order = cnet.order
    for step_index in range(config.max_steps):
        if count == 0:
            return FinalState(m, firings, TerminalStatus.QUIESCENT)
        if require_single_enabled and count > 1:
            names = [trans[i].tid for i in range(n_trans) if flags[i]]
            raise DeterminismViolationError(
                f"{len(names)} transitions enabled simultaneously after {firings} firings: {names}"
            )
        if deterministic:
            if simple_order:
                ti = flags.find(1)
            else:
                ti = next(i for i in order if flags[i])
        else:
            # BornRandom draws once per step, also for singleton groups,
            # so run() matches a manual step() loop draw for draw
            enabled = [i for i in order if flags[i]]
            try:
                ti = _born_choice(cnet, m, enabled, rng)
            except QpnError as e:
                e.step_index = step_index
                raise
        ct = trans[ti]
        try:
            ct.fast_fire(m)
        except CounterViolationError as e:
            e.step_index = step_index
            raise
        except Exception:
            # fast path failed before mutating: redo carefully for context
            try:
                cnet.fire_into(ti, m)
            except QpnError as e:
                e.step_index = step_index
                raise
        firings += 1
        if on_fire is not None:
            on_fire(ct.tid, m)
        for tj in ct.recheck:
            try:
                now = trans[tj].fast_enabled(m, eps)
            except Exception:
                now = _checked_enabled(cnet, tj, m, eps, step_index)
            if now != flags[tj]:
                count += 1 if now else -1
                flags[tj] = 1 if now else 0
    if count == 0:
        return FinalState(m, firings, TerminalStatus.QUIESCENT)
    return FinalState(m, firings, TerminalStatus.STEP_LIMIT)


def _checked_enabled(cnet: _CompiledNet, ti: int, m: Marking, eps: float, step_index: int) -> bool:
    try:
        return cnet.enabled(ti, m, eps)
    except QpnError as e:
        e.step_index = step_index
        raise
