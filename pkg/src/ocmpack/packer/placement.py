"""Rectangle placement of slices inside one RAM.

Coordinates are ``(row, bit)``: rows along the RAM depth, bits along its width.
Side-by-side placement is vertical co-location (words concatenated), stacked
placement is horizontal co-location (consecutive address ranges).
"""

from __future__ import annotations

from functools import lru_cache
from typing import Optional, Sequence

Shape = tuple[int, int]  # (width_bits, depth_words)
Position = tuple[int, int]  # (row, bit)


def shelf_place(shapes: Sequence[Shape], aspect: Shape) -> Optional[list[Position]]:
    """Column-shelf heuristic: widest first, stack into the first column that has room."""
    W, D = aspect
    order = sorted(range(len(shapes)), key=lambda i: (-shapes[i][0], -shapes[i][1], i))
    columns: list[list[int]] = []  # [bit_start, width, used_rows]
    next_bit = 0
    pos: list[Optional[Position]] = [None] * len(shapes)
    for i in order:
        w, d = shapes[i]
        if w > W or d > D:
            return None
        for col in columns:
            if w <= col[1] and col[2] + d <= D:
                pos[i] = (col[2], col[0])
                col[2] += d
                break
        else:
            if next_bit + w > W:
                return None
            columns.append([next_bit, w, d])
            pos[i] = (0, next_bit)
            next_bit += w
    return pos  # type: ignore[return-value]


def _overlaps(a_row, a_bit, a_w, a_d, b_row, b_bit, b_w, b_d) -> bool:
    return a_row < b_row + b_d and b_row < a_row + a_d and a_bit < b_bit + b_w and b_bit < a_bit + a_w


def exact_place(shapes: Sequence[Shape], aspect: Shape) -> Optional[list[Position]]:
    """Complete backtracking search over bottom-left-supported positions."""
    W, D = aspect
    n = len(shapes)
    if any(w > W or d > D for w, d in shapes):
        return None
    if sum(w * d for w, d in shapes) > W * D:
        return None
    placed: list[tuple[int, int, int, int]] = []  # row, bit, w, d
    pos: list[Optional[Position]] = [None] * n
    used = [False] * n

    def supported(row, bit, w, d):
        below = row == 0 or any(
            r + pd == row and b < bit + w and bit < b + pw for r, b, pw, pd in placed
        )
        left = bit == 0 or any(
            b + pw == bit and r < row + d and row < r + pd for r, b, pw, pd in placed
        )
        return below and left

    def search(k):
        if k == n:
            return True
        rows = sorted({0} | {r + pd for r, _, _, pd in placed})
        bits = sorted({0} | {b + pw for _, b, pw, _ in placed})
        tried = set()
        for i in range(n):
            if used[i] or shapes[i] in tried:
                continue
            tried.add(shapes[i])
            w, d = shapes[i]
            for row in rows:
                if row + d > D:
                    break
                for bit in bits:
                    if bit + w > W:
                        break
                    if any(_overlaps(row, bit, w, d, *p) for p in placed):
                        continue
                    if not supported(row, bit, w, d):
                        continue
                    used[i] = True
                    placed.append((row, bit, w, d))
                    pos[i] = (row, bit)
                    if search(k + 1):
                        return True
                    placed.pop()
                    used[i] = False
                    pos[i] = None
        return False

    return pos if search(0) else None  # type: ignore[return-value]


@lru_cache(maxsize=None)
def _place_sorted(shapes: tuple[Shape, ...], aspect: Shape) -> Optional[tuple[Position, ...]]:
    pos = shelf_place(shapes, aspect)
    if pos is None:
        pos = exact_place(shapes, aspect)
    return None if pos is None else tuple(pos)


def place(shapes: Sequence[Shape], aspects: Sequence[Shape]) -> Optional[tuple[Shape, list[Position]]]:
    """Place all shapes in one RAM, trying aspects in order. Returns (aspect, positions)."""
    order = sorted(range(len(shapes)), key=lambda i: (-shapes[i][0], -shapes[i][1], i))
    key = tuple(shapes[i] for i in order)
    for aspect in aspects:
        found = _place_sorted(key, tuple(aspect))
        if found is not None:
            pos: list[Position] = [(0, 0)] * len(shapes)
            for j, i in enumerate(order):
                pos[i] = found[j]
            return tuple(aspect), pos
    return None


@lru_cache(maxsize=None)
def fits_sorted(shapes: tuple[Shape, ...], aspects: tuple[Shape, ...]) -> Optional[Shape]:
    """First aspect that holds the (pre-sorted) shape tuple, or None."""
    for aspect in aspects:
        if _place_sorted(shapes, aspect) is not None:
            return aspect
    return None


def shape_key(shapes) -> tuple[Shape, ...]:
    return tuple(sorted(shapes, key=lambda s: (-s[0], -s[1])))
