"""Decide whether Pol{rho, sigma} is a maximal subclone of Pol rho.

The five sufficient-and-necessary conditions are checked in a fixed order
(I..V); the first that holds gives the verdict.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .derived import gamma_binary, lambda_pad
from .relcore import CentralRelation, Comparison, RelationError, compare, validate_central

VERDICTS = ("TypeI", "TypeII", "TypeIII", "TypeIV", "TypeV", "NotSubmaximal")
CONDITIONS = ("I", "II", "III", "IV", "V")


@dataclass
class ClassificationResult:
    verdict: str
    evidence: dict = field(default_factory=dict)
    reasons: list[str] = field(default_factory=list)

    @property
    def submaximal(self) -> bool:
        return self.verdict != "NotSubmaximal"

    def to_json(self) -> dict:
        return {"verdict": self.verdict, "evidence": self.evidence, "reasons": list(self.reasons)}


def _prepare(rho, sigma) -> tuple[CentralRelation, CentralRelation]:
    rho, sigma = validate_central(rho), validate_central(sigma)
    if rho.k != sigma.k:
        raise RelationError(f"domain mismatch: rho on E_{rho.k}, sigma on E_{sigma.k}")
    if rho.k < 3:
        raise RelationError("classification needs k >= 3")
    if rho.arity < 2:
        raise RelationError("rho must have arity >= 2")
    if rho.arity == sigma.arity and rho.rel == sigma.rel:
        raise RelationError("rho and sigma must differ")
    return rho, sigma


def _cond_I(rho, sigma):
    if sigma.arity != 1:
        return False, {"reason": "I: sigma is not unary"}
    common = sorted(rho.center & sigma.rel.elements())
    if not common:
        return False, {"reason": "I: center of rho misses sigma"}
    return True, {"element": common[0]}


def _cond_II(rho, sigma):
    if sigma.arity != 1:
        return False, {"reason": "II: sigma is not unary"}
    if rho.arity != 2:
        return False, {"reason": "II: rho is not binary"}
    gamma = gamma_binary(rho, sigma).relation
    members = sigma.rel.elements()
    hits = []
    missed = []
    for chain in rho.maximal_chains:
        inside = sorted(chain & members)
        if inside:
            hits.append({"chain": sorted(chain), "hit": inside[0]})
        else:
            missed.append(sorted(chain))
    reasons = []
    if gamma != rho.rel:
        reasons.append("II: common-neighbour relation differs from rho")
    if missed:
        reasons.append(f"II: maximal chains {missed} miss sigma")
    if reasons:
        return False, {"reason": "; ".join(reasons)}
    return True, {"gamma_equals_rho": True, "chain_hits": hits}


def _cond_III(rho, sigma):
    if sigma.arity != rho.arity:
        return False, {"reason": "III: arities differ"}
    cmp = compare(rho.rel, sigma.rel)
    if cmp in (Comparison.LEFT_STRICT, Comparison.RIGHT_STRICT):
        return True, {"direction": cmp.value}
    return False, {"reason": f"III: rho and sigma are {cmp.value}"}


def _cond_IV(rho, sigma):
    s, h = sigma.arity, rho.arity
    if not 2 <= s < h:
        return False, {"reason": "IV: needs 2 <= s < h"}
    common = sorted(rho.center & sigma.center)
    if not common:
        return False, {"reason": "IV: centers are disjoint"}
    return True, {"element": common[0]}


def _cond_V(rho, sigma):
    s, h = sigma.arity, rho.arity
    if not 2 <= h < s:
        return False, {"reason": "V: needs 2 <= h < s"}
    lam = lambda_pad(rho, s).relation
    if not lam.issubset(sigma.rel):
        return False, {"reason": "V: padded rho is not contained in sigma"}
    extra = (sigma.rel - lam).tuples()
    if not extra:
        return False, {"reason": "V: padded rho equals sigma"}
    return True, {"strictness_witness": list(extra[0])}


_CHECKS = {"I": _cond_I, "II": _cond_II, "III": _cond_III, "IV": _cond_IV, "V": _cond_V}


def condition(rho, sigma, which: str):
    """Evaluate a single condition; returns (holds, evidence-or-reason)."""
    if which not in _CHECKS:
        raise ValueError(f"condition must be one of {CONDITIONS}")
    rho, sigma = _prepare(rho, sigma)
    return _CHECKS[which](rho, sigma)


def classify(rho, sigma) -> ClassificationResult:
    rho, sigma = _prepare(rho, sigma)
    reasons = []
    for which in CONDITIONS:
        ok, info = _CHECKS[which](rho, sigma)
        if ok:
            return ClassificationResult(f"Type{which}", info)
        reasons.append(info["reason"])
    return ClassificationResult("NotSubmaximal", {}, reasons)


def check_evidence(rho, sigma, result: ClassificationResult) -> bool:
    """Re-derive a positive verdict from its recorded evidence alone."""
    rho, sigma = _prepare(rho, sigma)
    ev = result.evidence
    v = result.verdict
    if v == "TypeI":
        a = ev.get("element")
        return sigma.arity == 1 and a in rho.center and (a,) in sigma.rel
    if v == "TypeII":
        if rho.arity != 2 or sigma.arity != 1 or not ev.get("gamma_equals_rho"):
            return False
        if gamma_binary(rho, sigma).relation != rho.rel:
            return False
        hits = {frozenset(x["chain"]): x["hit"] for x in ev.get("chain_hits", [])}
        return all(B in hits and hits[B] in B and (hits[B],) in sigma.rel
                   for B in rho.maximal_chains)
    if v == "TypeIII":
        return sigma.arity == rho.arity and compare(rho.rel, sigma.rel).value == ev.get("direction") \
            and ev.get("direction") in (Comparison.LEFT_STRICT.value, Comparison.RIGHT_STRICT.value)
    if v == "TypeIV":
        a = ev.get("element")
        return 2 <= sigma.arity < rho.arity and a in rho.center and a in sigma.center
    if v == "TypeV":
        w = tuple(ev.get("strictness_witness", ()))
        if not 2 <= rho.arity < sigma.arity or len(w) != sigma.arity:
            return False
        lam = lambda_pad(rho, sigma.arity).relation
        return lam.issubset(sigma.rel) and w in sigma.rel and w not in lam
    return v == "NotSubmaximal" and classify(rho, sigma).verdict == v
