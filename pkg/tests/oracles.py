"""Independent oracles used by the test suite.

The nodal solver here shares no code with the series-parallel fold it
checks: it builds the full two-rail ladder as a resistor graph, contracts
zero-resistance edges, and solves the conductance Laplacian by Gaussian
elimination over exact rationals.  Floats are exact rationals, so the
oracle has no rounding error at all, whatever the spread between rail and
bridge resistances.
"""

from __future__ import annotations

import math
from fractions import Fraction

from nerveline import NerveLineSpec


def _solve_exact(matrix: list[list[Fraction]], rhs: list[Fraction]) -> list[Fraction]:
    n = len(rhs)
    rows = [row[:] + [rhs[i]] for i, row in enumerate(matrix)]
    for col in range(n):
        pivot_row = max(range(col, n), key=lambda r: abs(rows[r][col]))
        rows[col], rows[pivot_row] = rows[pivot_row], rows[col]
        pivot = rows[col][col]
        for r in range(col + 1, n):
            if rows[r][col] == 0:
                continue
            factor = rows[r][col] / pivot
            for c in range(col, n + 1):
                rows[r][c] -= factor * rows[col][c]
    solution = [Fraction(0)] * n
    for i in reversed(range(n)):
        acc = rows[i][n] - sum(rows[i][j] * solution[j] for j in range(i + 1, n))
        solution[i] = acc / rows[i][i]
    return solution


def nodal_line_resistance(
    spec: NerveLineSpec, contacts: list[tuple[float, float]]
) -> float:
    """Base-to-base resistance of the bridged ladder, by exact nodal analysis.

    Args:
        contacts: (position_mm, bridge_ohm) pairs, any order; duplicates
            at the same position are merged keeping the smallest bridge
            (the same contract the production solver implements).
    """
    merged: dict[float, float] = {}
    for position, bridge in contacts:
        if position in merged:
            merged[position] = min(merged[position], bridge)
        else:
            merged[position] = bridge
    points = sorted(merged.items())
    if not points:
        return math.inf

    # node 0: flat rail at the base, node 1: string rail at the base
    edges: list[tuple[int, int, Fraction]] = []
    flat_rho = Fraction(spec.flat_rail_ohm_per_mm)
    string_rho = Fraction(spec.string_rail_ohm_per_mm)
    prev_flat, prev_string = 0, 1
    prev_d = Fraction(0)
    count = 2
    for position, bridge in points:
        flat, string = count, count + 1
        count += 2
        span = Fraction(position) - prev_d
        edges.append((prev_flat, flat, flat_rho * span))
        edges.append((prev_string, string, string_rho * span))
        edges.append((flat, string, Fraction(bridge)))
        prev_flat, prev_string, prev_d = flat, string, Fraction(position)

    parent = list(range(count))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u, v, ohm in edges:
        if ohm == 0:
            parent[find(u)] = find(v)

    groups: dict[int, int] = {}
    for node in range(count):
        groups.setdefault(find(node), len(groups))
    source = groups[find(0)]
    sink = groups[find(1)]
    if source == sink:
        return spec.lead_offset_ohm

    n = len(groups)
    laplacian = [[Fraction(0)] * n for _ in range(n)]
    for u, v, ohm in edges:
        if ohm == 0:
            continue
        i, j = groups[find(u)], groups[find(v)]
        if i == j:
            continue
        conductance = 1 / ohm
        laplacian[i][i] += conductance
        laplacian[j][j] += conductance
        laplacian[i][j] -= conductance
        laplacian[j][i] -= conductance

    keep = [i for i in range(n) if i != sink]
    reduced = [[laplacian[i][j] for j in keep] for i in keep]
    current = [Fraction(0)] * len(keep)
    current[keep.index(source)] = Fraction(1)
    potential = _solve_exact(reduced, current)
    return spec.lead_offset_ohm + float(potential[keep.index(source)])


def chain_counts(spec: NerveLineSpec, position_mm: float) -> int:
    """ADC counts for a single firm press, straight from the circuit laws."""
    resistance = spec.lead_offset_ohm + spec.rail_ohm_per_mm * position_mm
    volts = spec.supply_volts * resistance / (resistance + spec.pullup_ohm)
    return math.floor(volts / spec.supply_volts * spec.adc_full_scale)
