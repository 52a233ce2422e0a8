"""Cutting long paths down to a bounded length without losing much.

Long schedules are awkward: every argument downstream (grouping into
distance classes, tile routing, the failure bounds) wants paths of length
comparable to the distance actually travelled.  The trick is to slice time
into slabs of width d; a path that wanders past the boundary of its origin
slab gets rewritten there to forward straight to its destination, which
preserves the forward count and caps the length by d plus the distance.
Straightened paths pile onto the boundary vertices, so the batch step also
keeps only one slab parity and at most fwd_cap paths per boundary vertex.
Each vertex admits store_cap + fwd_cap packets per step, so a counting
argument keeps at least a fwd_cap/(2(store_cap+fwd_cap)) share overall.
"""

from collections import Counter

from linesched import GridPath, truncate_integral, truncate_path

long_path = GridPath(0, 0, "sfsfsfsfsf")
kept, cut = truncate_path(long_path, d=4)
print(f"one path, slab width 4: {long_path.moves!r} -> {kept.moves!r}, "
      f"straightened at cell {cut}")

# A batch of staggered copies of the same shape.  Their start times spread
# over two slabs: the parity step keeps the bigger slab, and the boundary
# vertices then admit one rewritten path each (fwd_cap = 1).
packing = {i: GridPath(0, i, "sfsfsfsf") for i in range(8)}
survivors = truncate_integral(packing, d=4, store_cap=1, fwd_cap=1)

print(f"\n{len(survivors)} of {len(packing)} paths survive:")
for i in sorted(survivors):
    print(f"  id {i}: {packing[i].moves!r} -> {survivors[i].moves!r}")

loads = Counter()
for path in survivors.values():
    loads.update(path.edges())
worst = max(loads.values())
lengths = {len(p.moves) for p in survivors.values()}
print(f"\nworst edge load {worst} (cap argument allows store_cap + 2*fwd_cap"
      f" = 3), lengths {sorted(lengths)} (all <= 2d = 8)")
