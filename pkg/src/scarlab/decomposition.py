"""Free-cumulant decomposition of scar correlators <a|O(t_1)...O(t_q)|b>.

Inserting a resolution of the identity in each of the q-1 gaps between
operators and splitting every insertion into scar (c, d, ...) and thermal
(i, j, ...) states gives one diagram per non-crossing partition of the gaps
{1, ..., q}, with gap q standing for the a/b endpoint:

* the block containing q lists the gaps carrying scar insertions; they cut
  the chain into segments;
* every other block is a set of gaps sharing one thermal index; indices of
  different blocks in a segment are distinct.

Inside a segment the blocks reached by walking from its left end form the
arc (a scar free cumulant); each stretch between two gaps of the same block
closes a thermal loop. In the factorized evaluation each loop of length l is
replaced by the thermal free cumulant k_th^(l) at beta_ab, the only
approximation made. The unfactorized evaluation keeps the repeated-index sums
and, summed over all diagrams, reproduces the exact correlator for q <= 4.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .cumulants import (
    CANONICAL,
    DEFAULT_WINDOW_FRACTION,
    CumulantSeries,
    ScarPair,
    _as_times,
    make_ensemble,
    scar_correlator,
    thermal_free_cumulant,
)
from .errors import DomainError
from .partitions import noncrossing_partitions
from .spectral import EigenObservable, Spectrum

SUPPORTED_ORDERS = (2, 3, 4)

# names of the five q=3 diagrams in the familiar term list
THREE_POINT_NAMES = {
    "1|2|B": "term_1",
    "12|B": "term_2",
    "1B|2": "term_3c",
    "1|2B": "term_3pc",
    "12B": "term_4cd",
}


@dataclass(frozen=True)
class Node:
    """A thermal index on an arc or loop, with the loops hanging off it."""

    block: tuple[int, ...]
    loops: tuple["Chain", ...]


@dataclass(frozen=True)
class Chain:
    """Operators walked in order; ``nodes[k]`` sits between ops[k] and ops[k+1]."""

    ops: tuple[int, ...]
    nodes: tuple[Node, ...]

    def loops(self):
        for node in self.nodes:
            for loop in node.loops:
                yield loop
                yield from loop.loops()


@dataclass(frozen=True)
class Diagram:
    q: int
    partition: tuple[tuple[int, ...], ...]
    scar_gaps: tuple[int, ...]
    segments: tuple[Chain, ...]

    @property
    def code(self) -> str:
        def fmt(block):
            return "".join("B" if g == self.q else str(g) for g in block)
        return "|".join(fmt(b) for b in self.partition)

    @property
    def shape(self) -> str:
        arcs = ".".join(f"sc{len(seg.ops)}" for seg in self.segments)
        loops = sorted(len(lp.ops) for seg in self.segments for lp in seg.loops())
        counts: dict[int, int] = {}
        for length in loops:
            counts[length] = counts.get(length, 0) + 1
        factors = "".join(f"*th{k}" + (f"^{c}" if c > 1 else "") for k, c in sorted(counts.items()))
        return arcs + factors

    @property
    def label(self) -> str:
        if self.q == 3:
            return THREE_POINT_NAMES[self.code]
        return f"{self.shape}[{self.code}]"


def _parse_chain(left: int, right: int, block_of: dict) -> Chain:
    ops = [left + 1]
    nodes = []
    g = left + 1
    while g < right:
        block = block_of[g]
        if block[0] != g or block[-1] >= right:
            raise DomainError("partition is not non-crossing")
        loops = tuple(_parse_chain(block[k], block[k + 1], block_of) for k in range(len(block) - 1))
        nodes.append(Node(block=block, loops=loops))
        g = block[-1] + 1
        ops.append(g)
    return Chain(ops=tuple(ops), nodes=tuple(nodes))


def diagram_from_partition(partition, q: int) -> Diagram:
    block_of = {g: tuple(sorted(b)) for b in partition for g in b}
    scar_gaps = tuple(g for g in block_of[q] if g != q)
    cuts = (0,) + scar_gaps + (q,)
    segments = tuple(_parse_chain(cuts[k], cuts[k + 1], block_of) for k in range(len(cuts) - 1))
    return Diagram(q=q, partition=tuple(tuple(sorted(b)) for b in partition),
                   scar_gaps=scar_gaps, segments=segments)


@lru_cache(maxsize=None)
def diagrams(q: int) -> tuple[Diagram, ...]:
    """Every diagram of the q-point scar correlator, one per non-crossing partition."""
    return tuple(diagram_from_partition(p, q) for p in noncrossing_partitions(q))


# ---------------------------------------------------------------- evaluation

def _arc_matrix(mats, weights, rows, cols):
    """sum over pairwise-distinct nodes of M1[r,i1] w1[i1] M2[i1,i2] ... Mm[i_{m-1},c].

    ``weights`` vanish outside the thermal set. Supports up to three nodes.
    """
    m = len(mats)
    first = mats[0][rows]
    if m == 1:
        return first[:, cols]
    last = mats[-1][:, cols]
    if m == 2:
        return (first * weights[0]) @ last
    L = first * weights[0]
    R = weights[-1][:, None] * last
    if m == 3:
        M2 = mats[1]
        return L @ M2 @ R - (L * np.diagonal(M2)) @ R
    if m == 4:
        M2, M3 = mats[1], mats[2]
        w2 = weights[1]
        d2, d3 = np.diagonal(M2), np.diagonal(M3)
        s_all = (L @ M2) @ (w2[:, None] * M3) @ R
        s_ij = (L * (w2 * d2)) @ M3 @ R
        s_jk = L @ (M2 * (w2 * d3)[None, :]) @ R
        g = np.sum(M2 * w2[None, :] * M3.T, axis=1)
        s_ik = (L * g) @ R
        s_ijk = (L * (w2 * d2 * d3)) @ R
        return s_all - s_ij - s_jk - s_ik + 2 * s_ijk
    raise DomainError("arcs with more than three thermal nodes are not supported")


def _exact_loop(loop: Chain, mats, mask):
    """Per-anchor repeated-index sum of a thermal loop (lengths 1 and 2)."""
    if len(loop.ops) == 1:
        return np.diagonal(mats[loop.ops[0]])
    if len(loop.ops) == 2 and not loop.nodes[0].loops:
        A, B = mats[loop.ops[0]], mats[loop.ops[1]]
        return np.sum(A * mask[None, :] * B.T, axis=1) - np.diagonal(A) * np.diagonal(B) * mask
    raise DomainError("unfactorized loops longer than two operators are not supported (q > 4)")


def _loop_factor_series(loop: Chain, times, ens, obs, thermal):
    """k_th^(l)(loop times) times the factors of any loops nested inside."""
    length = len(loop.ops)
    if length == 1:
        vals = thermal_free_cumulant(ens, obs, thermal, np.zeros((len(times), 0)), 1).values
    elif length == 2:
        tau = (times[:, loop.ops[0] - 1] - times[:, loop.ops[1] - 1])[:, None]
        vals = thermal_free_cumulant(ens, obs, thermal, tau, 2).values
    else:
        raise DomainError("thermal loops longer than two operators are not supported (q > 4)")
    for node in loop.nodes:
        for inner in node.loops:
            vals = vals * _loop_factor_series(inner, times, ens, obs, thermal)
    return vals


def _evaluate(diagram: Diagram, O, E, times, a, b, scars, mask, loop_factor):
    """Value of one diagram at every time point.

    ``loop_factor`` is None for the unfactorized sums, otherwise the product of
    thermal-cumulant factors over all loops of the diagram.
    """
    q = diagram.q
    out = np.empty(len(times), dtype=complex)
    mask_f = mask.astype(float)
    for p, tv in enumerate(times):
        mats = {}
        for k in range(1, q + 1):
            u = np.exp(1j * E * tv[k - 1])
            mats[k] = u[:, None] * O * u.conj()[None, :]
        acc = None
        nseg = len(diagram.segments)
        for s, seg in enumerate(diagram.segments):
            rows = [a] if s == 0 else scars
            cols = [b] if s == nseg - 1 else scars
            weights = []
            for node in seg.nodes:
                w = mask_f.astype(complex)
                if loop_factor is None:
                    for loop in node.loops:
                        w = w * _exact_loop(loop, mats, mask_f)
                weights.append(w)
            block = _arc_matrix([mats[o] for o in seg.ops], weights, rows, cols)
            acc = block if acc is None else acc @ block
        val = acc[0, 0]
        if loop_factor is not None:
            val = val * loop_factor[p]
        out[p] = val
    return out


@dataclass(frozen=True)
class DecompositionReport:
    q: int
    pair: ScarPair
    terms: list
    sum: CumulantSeries
    exact: CumulantSeries
    factorized: bool
    max_abs_error: float
    max_rel_error: float

    def term(self, label: str) -> CumulantSeries:
        for t in self.terms:
            if t.label == label:
                return t
        raise KeyError(label)


def decompose_scar_correlator(spec: Spectrum, obs: EigenObservable, scarset, pair: ScarPair,
                              times, q: int, factorized: bool = True,
                              ens_kind: str = CANONICAL,
                              window_fraction: float = DEFAULT_WINDOW_FRACTION) -> DecompositionReport:
    """Term-by-term decomposition of <a|O(t_1)...O(t_q)|b> over non-crossing diagrams.

    Thermal indices run over every non-scar eigenstate (band edges included)
    so that the unfactorized terms add up to the exact correlator.
    ``max_rel_error`` is max|sum - exact| / max|exact| over the grid.
    """
    if q not in SUPPORTED_ORDERS:
        raise DomainError(f"decomposition supports q in {SUPPORTED_ORDERS}, got {q}")
    t = _as_times(times, q)
    O = np.asarray(obs.matrix)
    E = np.asarray(spec.energies)
    scars = [int(s) for s in scarset.scar_indices]
    if pair.a not in scars or pair.b not in scars:
        raise DomainError("pair endpoints must be selected scars")
    thermal = np.asarray(scarset.non_scar_indices, dtype=int)
    mask = np.zeros(len(E), dtype=bool)
    mask[thermal] = True

    ens = None
    if factorized:
        ens = make_ensemble(spec, 0.5 * (pair.E_a + pair.E_b), ens_kind, window_fraction)

    terms = []
    for diag in diagrams(q):
        loop_factor = None
        if factorized:
            loop_factor = np.ones(len(t), dtype=complex)
            for seg in diag.segments:
                for node in seg.nodes:
                    for loop in node.loops:
                        loop_factor = loop_factor * _loop_factor_series(loop, t, ens, obs, thermal)
        vals = _evaluate(diag, O, E, t, pair.a, pair.b, scars, mask, loop_factor)
        terms.append(CumulantSeries(diag.label, t, vals,
                                    meta={"shape": diag.shape, "partition": diag.code}))

    total = CumulantSeries("sum", t, np.sum([s.values for s in terms], axis=0))
    exact = scar_correlator(spec, obs, pair, t, q)
    err = np.abs(total.values - exact.values)
    peak = float(np.max(np.abs(exact.values))) if len(t) else 0.0
    max_abs = float(err.max()) if len(t) else 0.0
    max_rel = max_abs / peak if peak > 0 else (0.0 if max_abs == 0 else np.inf)
    return DecompositionReport(q=q, pair=pair, terms=terms, sum=total, exact=exact,
                               factorized=factorized, max_abs_error=max_abs, max_rel_error=max_rel)
