"""Bounded clone closure as a sanity probe.

At a fixed arity bound, add one gap operation to Pol{rho, sigma} and see
whether the closure reaches Pol rho at that bound.  Reaching it is
consistent with maximality; failing at a low bound says nothing, because
the generators that would finish the job may have higher arity.
"""

from centralclones.closure import CAVEAT, bounded_pol, saturation_probe
from centralclones.relcore import Relation

star0 = Relation.from_tuples(3, 2, [(a, b) for a in range(3) for b in range(3)
                                    if a == b or 0 in (a, b)])
for els in ([0], [1], [1, 2]):
    sigma = Relation.unary(3, els)
    rep = saturation_probe(star0, sigma, max_arity=1)
    hits = sum(r.reaches_top for r in rep.rows)
    print(f"sigma={els}: unary Pol{{rho,sigma}} has {rep.base_counts['1']} members, "
          f"Pol rho has {rep.top_counts['1']}; {hits}/{len(rep.rows)} gap operations saturate")

print("\nbinary level for sigma = [0]:")
pol2 = bounded_pol([star0, Relation.unary(3, [0])], 2)
print("  members per arity:", pol2.stats()["counts"])
rep = saturation_probe(star0, Relation.unary(3, [0]), max_arity=2)
print(f"  {sum(r.reaches_top for r in rep.rows)}/{len(rep.rows)} gap operations saturate")
print("\n" + CAVEAT)
