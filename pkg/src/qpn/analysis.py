"""Generic net analysis.

* marking predicates - comparisons between weight expressions combined with
  AND/OR/NOT, evaluated with a configurable equality tolerance;
* bounded reachability graphs for counter-only nets with constant integer
  weights, exportable as DOT text;
* exhaustive invariant checking over a reachability graph, returning the first
  counterexample with its firing path;
* seeded empirical outcome distributions over repeated BornRandom runs;
* incidence matrices for constant-weight nets.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Mapping, Union

from . import expr as _expr
from .errors import (
    ExprSyntaxError,
    NonConstantWeightsError,
    PredicateError,
    StateExplosionError,
    StepLimitError,
)
from .net import (
    ArcKind,
    Marking,
    PetriNet,
    Policy,
    RunConfig,
    TerminalStatus,
    run_final,
)
from .oracle import _require_integer_net
from .quantum import QuantumMapping

__all__ = [
    "Compare",
    "And",
    "Or",
    "Not",
    "MarkingPredicate",
    "parse_predicate",
    "evaluate_predicate",
    "ReachabilityGraph",
    "reachability_graph",
    "InvariantResult",
    "check_invariant",
    "EmpiricalDistribution",
    "empirical_distribution",
    "run_seed",
    "incidence_matrix",
    "to_dot",
]

DEFAULT_CMP_EPSILON = 1e-9

_CMP_OPS = ("==", "!=", "<=", ">=", "<", ">")


# --- predicates ----------------------------------------------------------------


@dataclass(frozen=True)
class Compare:
    left: _expr.WeightExpr
    op: str  # one of ==, !=, <=, >=, <, >
    right: _expr.WeightExpr


@dataclass(frozen=True)
class And:
    left: "MarkingPredicate"
    right: "MarkingPredicate"


@dataclass(frozen=True)
class Or:
    left: "MarkingPredicate"
    right: "MarkingPredicate"


@dataclass(frozen=True)
class Not:
    operand: "MarkingPredicate"


MarkingPredicate = Union[Compare, And, Or, Not]


class _PredicateParser:
    """Comparisons of weight expressions glued with AND/OR/NOT.

    Grammar: pred := conj ("OR" conj)* ; conj := unit ("AND" unit)* ;
    unit := "NOT" unit | "(" pred ")" | expr CMP expr.  A leading "(" is
    ambiguous (grouped predicate vs parenthesized expression), resolved by
    trying the comparison first and backtracking.
    """

    def __init__(self, tokens: list[_expr._Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> _expr._Token:
        return self.tokens[self.pos]

    def _is_keyword(self, word: str) -> bool:
        tok = self.peek()
        return tok.kind == "ident" and tok.text.upper() == word

    def parse(self) -> MarkingPredicate:
        node = self.parse_or()
        tok = self.peek()
        if tok.kind != "end":
            raise ExprSyntaxError(
                f"trailing input {tok.text!r}", tok.line, tok.column, ("end of input",)
            )
        return node

    def parse_or(self) -> MarkingPredicate:
        node = self.parse_and()
        while self._is_keyword("OR"):
            self.pos += 1
            node = Or(node, self.parse_and())
        return node

    def parse_and(self) -> MarkingPredicate:
        node = self.parse_unit()
        while self._is_keyword("AND"):
            self.pos += 1
            node = And(node, self.parse_unit())
        return node

    def parse_unit(self) -> MarkingPredicate:
        if self._is_keyword("NOT"):
            self.pos += 1
            return Not(self.parse_unit())
        saved = self.pos
        try:
            return self.parse_comparison()
        except ExprSyntaxError:
            if self.tokens[saved].kind != "(":
                raise
            self.pos = saved + 1
            node = self.parse_or()
            tok = self.peek()
            if tok.kind != ")":
                raise ExprSyntaxError("expected ')'", tok.line, tok.column, ("')'",)) from None
            self.pos += 1
            return node

    def parse_comparison(self) -> Compare:
        left = self._parse_expr()
        tok = self.peek()
        if tok.kind not in _CMP_OPS:
            raise ExprSyntaxError(
                f"expected comparison operator, found {tok.text!r}" if tok.kind != "end"
                else "expected comparison operator",
                tok.line,
                tok.column,
                _CMP_OPS,
            )
        self.pos += 1
        right = self._parse_expr()
        return Compare(left, tok.kind, right)

    def _parse_expr(self) -> _expr.WeightExpr:
        sub = _expr._Parser(self.tokens)
        sub.pos = self.pos
        node = sub.parse_expr()
        self.pos = sub.pos
        return node


def parse_predicate(text: str) -> MarkingPredicate:
    tokens = _expr._tokenize(text, operators=_CMP_OPS)
    return _PredicateParser(tokens).parse()


def evaluate_predicate(
    pred: MarkingPredicate,
    marking: Mapping[str, float],
    cmp_epsilon: float = DEFAULT_CMP_EPSILON,
) -> bool:
    """Evaluate with tolerant comparisons: equality means within cmp_epsilon."""
    if isinstance(pred, Compare):
        a = _expr.evaluate(pred.left, marking)
        b = _expr.evaluate(pred.right, marking)
        if pred.op == "==":
            return abs(a - b) <= cmp_epsilon
        if pred.op == "!=":
            return abs(a - b) > cmp_epsilon
        if pred.op == "<=":
            return a <= b + cmp_epsilon
        if pred.op == ">=":
            return a >= b - cmp_epsilon
        if pred.op == "<":
            return a < b - cmp_epsilon
        if pred.op == ">":
            return a > b + cmp_epsilon
        raise PredicateError(f"unknown comparison operator {pred.op!r}")
    if isinstance(pred, And):
        return evaluate_predicate(pred.left, marking, cmp_epsilon) and evaluate_predicate(
            pred.right, marking, cmp_epsilon
        )
    if isinstance(pred, Or):
        return evaluate_predicate(pred.left, marking, cmp_epsilon) or evaluate_predicate(
            pred.right, marking, cmp_epsilon
        )
    if isinstance(pred, Not):
        return not evaluate_predicate(pred.operand, marking, cmp_epsilon)
    raise PredicateError(f"not a predicate: {pred!r}")


def predicate_places(pred: MarkingPredicate) -> frozenset[str]:
    if isinstance(pred, Compare):
        return _expr.free_places(pred.left) | _expr.free_places(pred.right)
    if isinstance(pred, (And, Or)):
        return predicate_places(pred.left) | predicate_places(pred.right)
    if isinstance(pred, Not):
        return predicate_places(pred.operand)
    raise PredicateError(f"not a predicate: {pred!r}")


# --- reachability ---------------------------------------------------------------


@dataclass(frozen=True)
class ReachabilityGraph:
    """Bounded reachability graph: nodes in BFS discovery order, root first.

    ``edges`` holds (source node index, transition id, target node index);
    ``parents[i]`` is the (parent index, transition id) that first discovered
    node i, None for the root.
    """

    net: PetriNet
    nodes: tuple[tuple[float, ...], ...]
    edges: tuple[tuple[int, str, int], ...]
    parents: tuple[tuple[int, str] | None, ...]

    @property
    def root(self) -> tuple[float, ...]:
        return self.nodes[0]

    def quiescent_nodes(self) -> list[int]:
        with_successors = {src for src, _, _ in self.edges}
        return [i for i in range(len(self.nodes)) if i not in with_successors]

    def path_to(self, node_index: int) -> list[str]:
        """Transition ids from the root to the given node."""
        path: list[str] = []
        current = node_index
        while self.parents[current] is not None:
            parent, tid = self.parents[current]
            path.append(tid)
            current = parent
        path.reverse()
        return path


def reachability_graph(net: PetriNet, max_states: int = 10_000) -> ReachabilityGraph:
    """Complete bounded BFS exploration; transitions tried in ordinal order.

    Requires a counter-only net with constant integer weights; raises
    StateExplosionError past ``max_states`` distinct markings.
    """
    _require_integer_net(net)
    cnet = net.compiled()
    root = tuple(net.initial_marking())
    index: dict[tuple[float, ...], int] = {root: 0}
    nodes: list[tuple[float, ...]] = [root]
    parents: list[tuple[int, str] | None] = [None]
    edges: list[tuple[int, str, int]] = []
    queue: deque[int] = deque([0])
    while queue:
        src = queue.popleft()
        m: Marking = list(nodes[src])
        for ti in range(len(cnet.trans)):
            if not cnet.enabled(ti, m, 1e-12):
                continue
            successor = list(m)
            cnet.fire_into(ti, successor)
            key = tuple(successor)
            tid = cnet.trans[ti].tid
            if key not in index:
                if len(nodes) >= max_states:
                    raise StateExplosionError(f"more than {max_states} reachable markings")
                index[key] = len(nodes)
                nodes.append(key)
                parents.append((src, tid))
                queue.append(index[key])
            edges.append((src, tid, index[key]))
    return ReachabilityGraph(net, tuple(nodes), tuple(edges), tuple(parents))


@dataclass(frozen=True)
class InvariantResult:
    holds: bool
    counterexample: tuple[float, ...] | None = None
    path: tuple[str, ...] = ()

    def __bool__(self) -> bool:
        return self.holds


def check_invariant(
    graph: ReachabilityGraph,
    pred: MarkingPredicate | str,
    cmp_epsilon: float = DEFAULT_CMP_EPSILON,
) -> InvariantResult:
    """Evaluate the predicate on every node; first BFS counterexample wins."""
    if isinstance(pred, str):
        pred = parse_predicate(pred)
    place_ids = graph.net.place_ids()
    for i, node in enumerate(graph.nodes):
        env = dict(zip(place_ids, node))
        if not evaluate_predicate(pred, env, cmp_epsilon):
            return InvariantResult(False, node, tuple(graph.path_to(i)))
    return InvariantResult(True)


# --- empirical statistics ----------------------------------------------------------


def run_seed(seed: int, run_index: int) -> int:
    """Per-run seed: element run_index of the splitmix64 stream seeded by seed.

    Computes the splitmix64 finalizer of seed + (run_index + 1) * 2^64/phi, so
    run i is independent of execution order (parallel sweeps derive identical
    streams) and the streams of nearby seeds do not overlap.
    """
    z = (seed + (run_index + 1) * 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
    return z ^ (z >> 31)


@dataclass(frozen=True)
class EmpiricalDistribution:
    """Counts of terminal outcomes over seeded BornRandom runs.

    An outcome is the tuple of mapped-place labels holding a nonzero token
    count (|m| > 1e-9) at quiescence, in assignment order.
    """

    runs: int
    counts: dict[tuple[str, ...], int]

    def frequency(self, outcome: tuple[str, ...]) -> float:
        return self.counts.get(outcome, 0) / self.runs

    def stderr(self, outcome: tuple[str, ...]) -> float:
        f = self.frequency(outcome)
        return (f * (1.0 - f) / self.runs) ** 0.5

    def items(self) -> list[tuple[tuple[str, ...], float, float]]:
        return [(key, self.frequency(key), self.stderr(key)) for key in sorted(self.counts)]


def empirical_distribution(
    net: PetriNet,
    mapping: QuantumMapping,
    runs: int,
    seed: int = 0,
    max_steps: int = 1_000_000,
) -> EmpiricalDistribution:
    """Terminal-outcome frequencies over ``runs`` seeded BornRandom runs.

    Run i uses seed :func:`run_seed`(seed, i); identical inputs reproduce the
    distribution bit for bit.
    """
    if runs < 1:
        raise ValueError("runs must be >= 1")
    m0 = net.initial_marking()
    assigned = [(net.place_index[p], label) for p, label in mapping.assignments]
    counts: dict[tuple[str, ...], int] = {}
    for i in range(runs):
        config = RunConfig(policy=Policy.BORN_RANDOM, seed=run_seed(seed, i), max_steps=max_steps)
        final = run_final(net, m0, config)
        if final.status != TerminalStatus.QUIESCENT:
            raise StepLimitError(f"run {i} did not reach quiescence within {max_steps} steps")
        key = tuple(label for idx, label in assigned if abs(final.marking[idx]) > 1e-9)
        counts[key] = counts.get(key, 0) + 1
    return EmpiricalDistribution(runs, counts)


# --- incidence ----------------------------------------------------------------------


def incidence_matrix(net: PetriNet) -> list[list[float]]:
    """Transitions x places net-effect matrix for constant-weight nets.

    Entry (t, p) sums deposits minus consumes; guard arcs contribute 0.
    Constant non-integer weights are fine (the matrix is real); any
    marking-dependent weight (including drains) raises
    NonConstantWeightsError.
    """
    rows = [[0.0] * len(net.places) for _ in net.transitions]
    for arc in net.arcs:
        weight = arc.parsed_weight()
        if _expr.free_places(weight):
            raise NonConstantWeightsError(
                f"arc {arc.source}->{arc.target} has a marking-dependent weight"
            )
        value = _expr.evaluate(weight, {})
        if arc.kind == ArcKind.DEPOSIT:
            rows[net.transition_index[arc.source]][net.place_index[arc.target]] += value
        elif arc.kind == ArcKind.CONSUME:
            rows[net.transition_index[arc.target]][net.place_index[arc.source]] -= value
        # guards contribute nothing
    return rows


# --- DOT export -----------------------------------------------------------------------


def _marking_label(net: PetriNet, marking: tuple[float, ...]) -> str:
    parts = []
    for place, value in zip(net.places, marking):
        if value != 0:
            text = str(int(value)) if value == int(value) else f"{value:.6g}"
            parts.append(f"{place.id}={text}")
    return " ".join(parts) if parts else "0"


def to_dot(graph: ReachabilityGraph) -> str:
    """Graphviz text: nodes labeled with their nonzero marking entries."""
    quote = lambda s: '"' + s.replace('"', r"\"") + '"'  # noqa: E731
    lines = [f"digraph {quote(graph.net.name)} {{", "  rankdir=LR;", "  node [shape=box];"]
    for i, node in enumerate(graph.nodes):
        shape = ' shape=doubleoctagon' if i == 0 else ""
        lines.append(f"  s{i} [label={quote(_marking_label(graph.net, node))}{shape}];")
    for src, tid, dst in graph.edges:
        lines.append(f"  s{src} -> s{dst} [label={quote(tid)}];")
    lines.append("}")
    return "\n".join(lines) + "\n"
