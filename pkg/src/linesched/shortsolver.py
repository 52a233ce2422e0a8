"""Exact tile-confined solver for short-distance requests.

Requests with distance at most some level L get a dedicated deterministic
algorithm: fix a tiling of side 4L (rounded up to a multiple of 6), split
the requests into the four shift classes, and inside every tile of a class
compute an exact maximum-cardinality packing of paths that never leave the
tile and are at most 2L long.  Bounded length keeps every path inside the
tile of its origin (2L is half a tile side), so tiles never interact and
per-tile exact search is sound.  The best of the four class solutions wins.

The per-tile search is a branch and bound over requests in id order; path
candidates are enumerated lazily, forwards before stores.  A node budget
guards against adversarial pile-ups in a single tile; when it trips the
remaining requests in that tile are packed greedily, which keeps the output
valid (the budget is far beyond anything random workloads reach).
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Sequence

from .grid import GridPath, request_origin
from .model import PacketRequest, round_up_to_multiple_of_6
from .tiling import Tiling, partition_classes, shift_pairs

__all__ = ["TileSolution", "solve_short", "solve_tile_exact"]


@dataclass(frozen=True)
class TileSolution:
    packing: dict[int, GridPath]
    exact: bool          # False when the node budget forced a greedy finish
    nodes: int


def _tile_paths(req: PacketRequest, row1: int, col1: int, max_len: int):
    """All confined paths for one request, forwards tried before stores.

    Yields move strings with exactly req.distance forwards, ending on the
    delivering forward, never exceeding max_len moves or leaving the tile
    whose exclusive upper bounds are row1/col1.  Deadlines cap the length
    further since arrival time is release time plus path length.
    """
    if req.deadline is not None:
        max_len = min(max_len, req.deadline - req.t)
    dist = req.distance
    if max_len < dist or req.b > row1 - 1:
        return
    start_row, start_col = request_origin(req)
    budget = max_len - dist          # how many stores may be inserted
    budget = min(budget, col1 - 1 - start_col)
    if budget < 0:
        return
    stack: list[tuple[int, str]] = [(0, "")]
    while stack:
        used_stores, moves = stack.pop()
        done_f = len(moves) - used_stores
        if done_f == dist:
            yield moves
            continue
        # stores pushed first so forwards pop first
        if used_stores < budget:
            stack.append((used_stores + 1, moves + "s"))
        stack.append((used_stores, moves + "f"))


def solve_tile_exact(requests: Sequence[PacketRequest], tiling: Tiling,
                     tile: tuple[int, int], store_cap: int, fwd_cap: int,
                     max_len: int, node_budget: int = 200_000) -> TileSolution:
    """Maximum-cardinality packing of confined paths inside one tile."""
    row0, col0 = tiling.tile_origin(tile)
    row1, col1 = row0 + tiling.k, col0 + tiling.k
    reqs = sorted(requests, key=lambda r: r.id)
    for r in reqs:
        if tiling.tile_of(*request_origin(r)) != tile:
            raise ValueError(f"request {r.id} does not originate in tile {tile}")

    candidates: list[list[GridPath]] = []
    for r in reqs:
        row, col = request_origin(r)
        candidates.append([GridPath(row, col, mv)
                           for mv in _tile_paths(r, row1, col1, max_len)])

    best: dict[int, GridPath] = {}
    loads: dict[tuple[str, int, int], int] = defaultdict(int)
    chosen: dict[int, GridPath] = {}
    nodes = 0
    budget_left = node_budget

    def fits(path: GridPath) -> bool:
        return all(
            loads[e] < (store_cap if e[0] == "s" else fwd_cap)
            for e in path.edges())

    def place(path: GridPath, sign: int) -> None:
        for e in path.edges():
            loads[e] += sign

    def search(idx: int) -> None:
        nonlocal nodes, budget_left, best
        if len(chosen) + (len(reqs) - idx) <= len(best):
            return
        if idx == len(reqs):
            if len(chosen) > len(best):
                best = dict(chosen)
            return
        for path in candidates[idx]:
            if budget_left <= 0:
                return
            nodes += 1
            budget_left -= 1
            if fits(path):
                place(path, 1)
                chosen[reqs[idx].id] = path
                search(idx + 1)
                del chosen[reqs[idx].id]
                place(path, -1)
        search(idx + 1)

    search(0)
    exact = budget_left > 0
    if not exact:
        # greedy completion: keep whatever beats the truncated search
        greedy: dict[int, GridPath] = {}
        loads.clear()
        for r, cands in zip(reqs, candidates):
            for path in cands:
                if fits(path):
                    place(path, 1)
                    greedy[r.id] = path
                    break
        if len(greedy) > len(best):
            best = greedy
    return TileSolution(best, exact, nodes)


def solve_short(requests: Iterable[PacketRequest], level: float,
                store_cap: int, fwd_cap: int,
                node_budget: int = 200_000) -> dict[int, GridPath]:
    """Best-of-four-classes exact solver for distances up to ``level``.

    Returns a valid packing; unservable requests (deadline ahead of the
    earliest possible arrival) are simply left out.
    """
    reqs = [r for r in requests]
    for r in reqs:
        if r.distance > level:
            raise ValueError(
                f"request {r.id} travels {r.distance} > level {level}")
    max_len = int(2 * level)
    k = round_up_to_multiple_of_6(4 * level)
    classes = partition_classes(reqs, k)
    best: dict[int, GridPath] = {}
    for (phi_col, phi_row), cls in zip(shift_pairs(k), classes):
        tiling = Tiling(k, phi_col, phi_row)
        by_tile: dict[tuple[int, int], list[PacketRequest]] = defaultdict(list)
        for r in cls:
            by_tile[tiling.tile_of(*request_origin(r))].append(r)
        packing: dict[int, GridPath] = {}
        for tile in sorted(by_tile):
            sol = solve_tile_exact(by_tile[tile], tiling, tile,
                                   store_cap, fwd_cap, max_len, node_budget)
            packing.update(sol.packing)
        if len(packing) > len(best):
            best = packing
    return best
