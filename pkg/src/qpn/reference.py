"""Published counterfactuality rates for the SLAZ2013 protocol.

Values are detection probabilities printed to three decimals over the
standard grid N in {320, 500, 1250, 2500} x M in {25, 50, 75, 100, 150}:
D1 for passing mode, D2 for blocking mode.

The blocking N=2500 row is numerically inconsistent with the survival-factor
recursion that reproduces the other three rows (its implied per-cycle loss is
about four times smaller); `qpn tables` reports that row as ANOMALY instead of
grading it, and the README discusses the discrepancy.
"""

from __future__ import annotations

GRID_N = (320, 500, 1250, 2500)
GRID_M = (25, 50, 75, 100, 150)

PASSING_TABLE: dict[tuple[int, int], float] = {
    (n, m): value
    for n in GRID_N
    for m, value in zip(GRID_M, (0.906, 0.952, 0.968, 0.976, 0.984))
}

BLOCKING_TABLE: dict[tuple[int, int], float] = {
    (320, 25): 0.912, (320, 50): 0.831, (320, 75): 0.758, (320, 100): 0.693, (320, 150): 0.582,
    (500, 25): 0.943, (500, 50): 0.887, (500, 75): 0.836, (500, 100): 0.788, (500, 150): 0.702,
    (1250, 25): 0.977, (1250, 50): 0.953, (1250, 75): 0.930, (1250, 100): 0.908, (1250, 150): 0.865,
    (2500, 25): 0.997, (2500, 50): 0.994, (2500, 75): 0.991, (2500, 100): 0.988, (2500, 150): 0.982,
}

ANOMALOUS_BLOCKING_N = frozenset({2500})

DEFAULT_TOL_PASSING = 0.0005
DEFAULT_TOL_BLOCKING = 0.01
NET_ORACLE_TOLERANCE = 1e-9


def reference_value(mode: str, n: int, m: int) -> float | None:
    table = PASSING_TABLE if mode == "passing" else BLOCKING_TABLE
    return table.get((n, m))


def is_anomalous(mode: str, n: int) -> bool:
    return mode == "blocking" and n in ANOMALOUS_BLOCKING_N
