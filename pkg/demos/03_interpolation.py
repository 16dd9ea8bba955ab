"""Rebuilding a target operation from one operation that escapes Pol{rho, sigma}.

When a pair is maximal, adding any g in Pol rho outside Pol sigma must give
back all of Pol rho.  The construction composes g with operations of
Pol{rho, sigma} into a list S, then finds H in Pol{rho, sigma} such that
H(x, S(x)) equals the target for every x.
"""

from centralclones.interp import ext_map, interpolate
from centralclones.polycheck import constant
from centralclones.relcore import Operation, Relation

star0 = Relation.from_tuples(3, 2, [(a, b) for a in range(3) for b in range(3)
                                    if a == b or 0 in (a, b)])
swap12 = Operation.from_table(3, [0, 2, 1])

for sigma, g in ((Relation.unary(3, [0]), constant(3, 1)),
                 (Relation.unary(3, [1, 2]), constant(3, 0))):
    t = interpolate(star0, sigma, g, swap12)
    print(f"sigma = {sorted(sigma.elements())}: {t.sigma_type}, q = {t.q}, c = {t.c}")
    print("  S tables:", [f.table.tolist() for f in t.S])
    print("  H table: ", t.H.table.tolist())
    for x in range(3):
        print(f"  H{ext_map(t.S, (x,))} = {t.H(*ext_map(t.S, (x,)))}  target({x}) = {swap12(x)}")
    for name, check in t.checks.items():
        print(f"  {'PASS' if check['ok'] else 'FAIL'} {name}")
