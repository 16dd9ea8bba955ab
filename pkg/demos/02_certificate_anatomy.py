"""What a non-maximality certificate contains and how it is checked.

For a pair (rho, sigma) classified NotSubmaximal the certificate names a
relation delta built from rho and sigma by conjunction and projection, an
operation f_mid preserving rho and delta but not sigma, and an operation
g_top preserving rho but not delta.  Together they place Pol{rho, delta}
strictly between Pol{rho, sigma} and Pol rho.
"""

import dataclasses
import itertools
import json

from centralclones.certify import find_certificate, verify_certificate
from centralclones.polycheck import constant
from centralclones.relcore import Relation

star0 = Relation.from_tuples(3, 2, [(a, b) for a in range(3) for b in range(3)
                                    if a == b or 0 in (a, b)])
only1 = Relation.unary(3, [1])

cert = find_certificate(star0, only1)
print("delta derived as:", cert.delta_spec.describe())
print("delta members:", cert.delta.tuples())
print("f_mid table:", cert.f_mid.table.tolist(), " g_top table:", cert.g_top.table.tolist())
print("verifies:", bool(verify_certificate(star0, only1, cert)))

# Swap f_mid for the constant 1: it preserves {1}, so the middle clause fails.
forged = dataclasses.replace(cert, f_mid=constant(3, 1), f_mid_witness=None)
res = verify_certificate(star0, only1, forged)
print(f"forged f_mid -> ok={res.ok}, clause {res.clause}: {res.message}")

# The JSON form is what the `certify` subcommand writes.
print(json.dumps(cert.to_json(), sort_keys=True)[:200], "...")

# A pair on four elements whose certificate needs a sparse pattern operation.
t2 = Relation.from_tuples(4, 3, [t for t in itertools.product(range(4), repeat=3)
                                 if len(set(t)) < 3 or 2 in t])
big = find_certificate(t2, Relation.unary(4, [0, 1, 3]))
print("\nfour-element pair:", big.lemma_tag, "g_top arity", big.g_top.arity,
      "given by", len(big.g_top.values), "special inputs")
