"""Non-crossing set partitions of {1, ..., q}."""

from __future__ import annotations

from math import comb

from .errors import DomainError

MAX_ORDER = 8

Partition = tuple[tuple[int, ...], ...]


def catalan(n: int) -> int:
    return comb(2 * n, n) // (n + 1)


def _restricted_growth_strings(n: int):
    # a[k] = block label of element k+1; labels appear in first-use order
    a = [0] * n
    yield tuple(a)
    while True:
        # rightmost position that can still be incremented
        k = n - 1
        while k > 0 and a[k] > max(a[:k]):
            k -= 1
        if k == 0:
            return
        a[k] += 1
        for m in range(k + 1, n):
            a[m] = 0
        yield tuple(a)


def _blocks(rgs) -> Partition:
    groups: dict[int, list[int]] = {}
    for element, label in enumerate(rgs, start=1):
        groups.setdefault(label, []).append(element)
    return tuple(tuple(groups[k]) for k in sorted(groups))


def is_noncrossing(partition) -> bool:
    """No i < j < k < l with i, k in one block and j, l in another."""
    owner = {e: b for b, block in enumerate(partition) for e in block}
    elems = sorted(owner)
    for x, i in enumerate(elems):
        for j in elems[x + 1:]:
            if owner[j] == owner[i]:
                continue
            for k in elems:
                if k <= j or owner[k] != owner[i]:
                    continue
                for l in elems:
                    if l > k and owner[l] == owner[j]:
                        return False
    return True


def noncrossing_partitions(q: int) -> list[Partition]:
    """All non-crossing partitions of {1..q}, ordered by restricted growth string.

    Blocks are sorted tuples listed by their smallest element; there are
    Catalan(q) of them.
    """
    if not 1 <= q <= MAX_ORDER:
        raise DomainError(f"q must lie in [1, {MAX_ORDER}], got {q}")
    return [p for p in map(_blocks, _restricted_growth_strings(q)) if is_noncrossing(p)]
