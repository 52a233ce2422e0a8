"""Requests, the untilted grid, and what the validator checks.

A request asks to move one packet from node a to node b on a directed line,
arriving at time t.  Scheduling happens on a grid whose rows are nodes and
whose columns absorb time: the packet sitting at node v at time t lives in
cell (v, t - v), storing moves it one column right, forwarding one row down.
Both moves cost one time step, so arrival time is t plus the move count and
the whole schedule is just a string of 's' and 'f' per request.
"""

from linesched import (GridPath, Instance, PacketRequest, request_origin,
                       throughput, validate_schedule)
from linesched.grid import packing_to_schedule

inst = Instance(n=6, B=1, c=1, requests=(
    PacketRequest(0, a=0, b=3, t=2),
    PacketRequest(1, a=1, b=3, t=2),
    PacketRequest(2, a=1, b=3, t=3),
))

for req in inst.requests:
    print(f"request {req.id}: {req.a} -> {req.b}, arrives t={req.t}, "
          f"grid origin {request_origin(req)}")

# Request 0 can go straight down.  Requests 1 and 2 both need the forward
# edges out of rows 1 and 2; storing first lets request 2 slide past on a
# later column.
packing = {
    0: GridPath(0, 2, "fff"),
    1: GridPath(1, 1, "ff"),
    2: GridPath(1, 2, "sff"),
}

schedule = packing_to_schedule(inst, packing)
verdict = validate_schedule(inst, schedule)
print(f"\nschedule {schedule}")
print(f"valid: {verdict.ok}, delivered: {verdict.accepted}, "
      f"arrivals: {verdict.arrivals}")
print(f"throughput {throughput(inst, schedule)}")

# Overload one forward edge and the validator names the step that broke.
clash = dict(schedule)
clash[2] = "ff"
bad = validate_schedule(inst, clash)
print(f"\nafter forcing request 2 onto request 1's edges: ok={bad.ok}")
for line in bad.violations:
    print(f"  {line}")
