"""
Exhaustive versus minimum-distance candidate sets
==================================================

The exhaustive set keeps every port-to-user assignment except single-user
modes that leave ports idle. The minimum-distance set starts from "every
port serves its nearest user" and only switches ports off, plus one full
single-user mode for the user closest to any port.
"""

from dasrate import (CellLayout, Position, distance_matrix, enumerate_ideal, generate_min_distance_candidates,
                     ideal_count, make_stream, proposed_count, sample_uniform_users)

print(f"{'N=K':>4} {'exhaustive':>11} {'min-distance':>13} {'fraction':>9}")
for n in range(1, 6):
    full, reduced = ideal_count(n, n), proposed_count(n)
    print(f"{n:4d} {full:11d} {reduced:13d} {reduced / full:9.2%}")

##############################################################################
# Table I worked through for two users and two ports.

layout = CellLayout.canonical(2)
users = [Position(-2.5, -2.0), Position(3.0, 4.5)]
d = distance_matrix(users, layout)
print("\ndistances (rows = users, columns = ports):\n", d.round(4))
print("exhaustive:", enumerate_ideal(2, 2).as_lists())
print("min-distance:", generate_min_distance_candidates(d).as_lists())

##############################################################################
# A random drop with four ports and four users.

layout4 = CellLayout.canonical(4)
users4 = sample_uniform_users(4, layout4.cell_radius, make_stream(42))
cands = generate_min_distance_candidates(distance_matrix(users4, layout4))
print(f"\nN=K=4 drop: {len(cands)} candidates")
for m in cands:
    print("  ", m)
