"""Finite certificates that Pol{rho, sigma} is NOT maximal in Pol rho.

A certificate names a relation delta derived from (rho, sigma) together with
two separating operations:

* ``f_mid`` preserves rho and delta but not sigma, so
  Pol{rho,sigma} is strictly inside Pol{rho,delta};
* ``g_top`` preserves rho but not delta, so Pol{rho,delta} is strictly
  inside Pol rho.

Since delta is primitive-positively defined from rho and sigma, every common
polymorphism of rho and sigma preserves it; the derivation transcript lets a
verifier recompute delta, so checking a certificate involves no search.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass

import numpy as np

from . import derived as dv
from .classifier import classify
from .derived import Derived, DerivedSpec
from .polycheck import (BudgetExceeded, OpQuery, PatternOperation, SearchExhausted,
                        all_tuples_idx, default_is_central, find_separator, find_violation_columns, holds,
                        pattern_preserves)
from .relcore import (CentralRelation, Domain, decode, Operation, Relation, RelationError, place_values,
                      relation_from_json, relation_to_json, validate_central)

log = logging.getLogger(__name__)

SCHEMA = 1
DEFAULT_SEPARATOR_ARITY = 2
DEFAULT_NODE_BUDGET = 100_000
MAX_GADGET_WIDTH = 12
MAX_GADGET_VALUES = 1 << 16
MAX_FALLBACK_TABLE = 1 << 16


# ---------------------------------------------------------------------------
# gadgets


@dataclass(frozen=True)
class GadgetSpec:
    """Recipe for a q-ary operation that sends N chosen columns to a value
    row and every other input to a default element.

    ``index_family`` lists h-tuples of positions in 0..N-1.  Row j writes
    ``forbidden_tuple`` onto the positions of the j-th entry (in order) and
    ``filler`` everywhere else; ``extra_rows`` are appended verbatim.  Column
    i of the resulting q x N matrix is the i-th special input.
    """

    forbidden_tuple: tuple
    target_arity: int
    value_row: tuple
    default: int
    index_family: tuple
    filler: int | None = None
    extra_rows: tuple = ()

    @classmethod
    def standard(cls, forbidden, value_row, default, filler=None) -> "GadgetSpec":
        h, n = len(forbidden), len(value_row)
        family = tuple(itertools.combinations(range(n), h))
        return cls(tuple(forbidden), n, tuple(value_row), int(default), family, filler)

    @property
    def arity(self) -> int:
        return len(self.index_family) + len(self.extra_rows)

    def rows(self) -> np.ndarray:
        b = self.forbidden_tuple
        fill = b[0] if self.filler is None else self.filler
        out = np.full((len(self.index_family), self.target_arity), fill, dtype=np.int64)
        for j, sel in enumerate(self.index_family):
            for l, p in enumerate(sel):
                out[j, p] = b[l]
        if self.extra_rows:
            out = np.vstack([out, np.asarray(self.extra_rows, dtype=np.int64)])
        return out

    def columns(self) -> np.ndarray:
        return self.rows().T


def split_family(h: int, n: int) -> tuple:
    """Position tuples taking l < h positions from the first h and the rest
    from the tail h..n-1, with 1 <= l."""
    out = []
    for l in range(1, h):
        for head in itertools.combinations(range(h), l):
            for tail in itertools.combinations(range(h, n), h - l):
                out.append(head + tail)
    return tuple(out)


def build_gadget(spec: GadgetSpec, rho) -> PatternOperation:
    """The operation described by ``spec``.  Raises RelationError when the
    recipe is malformed and RuntimeError if the result fails to preserve rho."""
    rho_rel = rho.rel if isinstance(rho, CentralRelation) else rho
    k, h = rho_rel.k, rho_rel.arity
    if len(spec.forbidden_tuple) != h:
        raise RelationError("forbidden tuple must have the arity of rho")
    if spec.forbidden_tuple in rho_rel:
        raise RelationError(f"{spec.forbidden_tuple} lies in rho")
    if spec.target_arity > MAX_GADGET_WIDTH:
        raise BudgetExceeded(f"gadget width {spec.target_arity} exceeds {MAX_GADGET_WIDTH}")
    f = PatternOperation(k, spec.arity, spec.columns(), np.asarray(spec.value_row), spec.default)
    if not pattern_preserves(f, rho_rel):
        raise RuntimeError("gadget does not preserve rho")
    return f


# ---------------------------------------------------------------------------
# certificates


@dataclass
class Certificate:
    rho: Relation
    sigma: Relation
    delta: Relation
    delta_spec: DerivedSpec
    f_mid: Operation | PatternOperation
    g_top: Operation | PatternOperation
    lemma_tag: str
    f_mid_witness: tuple | None = None
    g_top_witness: tuple | None = None
    separator_max_arity: int = DEFAULT_SEPARATOR_ARITY

    def to_json(self) -> dict:
        def op(f, wit):
            out = {"k": f.k, "arity": f.arity}
            if isinstance(f, PatternOperation):
                out["pattern"] = {"columns": f.columns.tolist(),
                                  "values": [int(x) for x in f.values],
                                  "default": int(f.default)}
            else:
                out["table"] = [int(x) for x in f.table]
            if wit is not None:
                out["violation"] = [list(c) for c in wit]
            return out
        return {
            "schema": SCHEMA,
            "rho": relation_to_json(self.rho),
            "sigma": relation_to_json(self.sigma),
            "delta": {"relation": relation_to_json(self.delta),
                      "derived_spec": self.delta_spec.to_json()},
            "f_mid": op(self.f_mid, self.f_mid_witness),
            "g_top": op(self.g_top, self.g_top_witness),
            "lemma_tag": self.lemma_tag,
            "separator_max_arity": self.separator_max_arity,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Certificate":
        try:
            if obj.get("schema") != SCHEMA:
                raise RelationError(f"unsupported certificate schema {obj.get('schema')!r}")
            rho = relation_from_json(obj["rho"])
            sigma = relation_from_json(obj["sigma"])
            delta = relation_from_json(obj["delta"]["relation"])
            spec = DerivedSpec.from_json(obj["delta"]["derived_spec"])

            def op(d):
                k = int(d.get("k", rho.k))
                if "pattern" in d:
                    p = d["pattern"]
                    f = PatternOperation(k, int(d["arity"]),
                                         np.asarray(p["columns"], dtype=np.int64).reshape(-1, int(d["arity"])),
                                         np.asarray(p["values"], dtype=np.int64), int(p["default"]))
                else:
                    f = Operation(Domain(k), int(d["arity"]), np.asarray(d["table"], dtype=np.int64))
                wit = d.get("violation")
                return f, (tuple(tuple(int(x) for x in c) for c in wit) if wit else None)

            f_mid, fw = op(obj["f_mid"])
            g_top, gw = op(obj["g_top"])
            return cls(rho, sigma, delta, spec, f_mid, g_top, str(obj.get("lemma_tag", "")),
                       fw, gw, int(obj.get("separator_max_arity", DEFAULT_SEPARATOR_ARITY)))
        except (KeyError, TypeError, ValueError) as exc:
            raise RelationError(f"malformed certificate: {exc}") from exc


@dataclass
class Verification:
    ok: bool
    clause: str | None = None
    message: str = ""

    def __bool__(self) -> bool:
        return self.ok


def _violates(f, rel: Relation, witness) -> bool:
    """True iff f maps some member tuples of rel outside rel.  A supplied
    witness is checked first; otherwise (or if it is bogus) search."""
    if witness is not None and len(witness) == f.arity:
        cols = [tuple(c) for c in witness]
        if all(len(c) == rel.arity and c in rel for c in cols):
            image = tuple(f(*[c[j] for c in cols]) for j in range(rel.arity))
            if image not in rel:
                return True
    if isinstance(f, PatternOperation):
        f = f.to_operation(MAX_FALLBACK_TABLE)
    return find_violation_columns(f, rel) is not None


def verify_certificate(rho, sigma, cert: Certificate) -> Verification:
    rho = rho.rel if isinstance(rho, CentralRelation) else rho
    sigma = sigma.rel if isinstance(sigma, CentralRelation) else sigma
    if cert.rho != rho or cert.sigma != sigma:
        return Verification(False, "a", "certificate is about a different pair")
    try:
        recomputed = dv.evaluate(cert.delta_spec, rho, sigma)
    except RelationError as exc:
        return Verification(False, "a", f"transcript does not evaluate: {exc}")
    if recomputed.arity != cert.delta.arity or recomputed != cert.delta:
        return Verification(False, "a", "transcript does not reproduce delta")
    delta = cert.delta
    for f in (cert.f_mid, cert.g_top):
        if f.k != rho.k:
            return Verification(False, "b" if f is cert.f_mid else "c", "operation on wrong domain")
    try:
        if not holds(cert.f_mid, rho):
            return Verification(False, "b", "f_mid does not preserve rho")
        if not holds(cert.f_mid, delta):
            return Verification(False, "b", "f_mid does not preserve delta")
        if not _violates(cert.f_mid, sigma, cert.f_mid_witness):
            return Verification(False, "b", "f_mid preserves sigma")
    except BudgetExceeded as exc:
        return Verification(False, "b", f"f_mid cannot be checked: {exc}")
    try:
        if not holds(cert.g_top, rho):
            return Verification(False, "c", "g_top does not preserve rho")
        if not _violates(cert.g_top, delta, cert.g_top_witness):
            return Verification(False, "c", "g_top preserves delta")
    except BudgetExceeded as exc:
        return Verification(False, "c", f"g_top cannot be checked: {exc}")
    return Verification(True)


# ---------------------------------------------------------------------------
# delta catalogue


def _regime(h: int, s: int) -> str:
    if s == 1:
        return "unary"
    if s == h:
        return "equal"
    return "wider" if h < s else "narrower"


def delta_candidates(rho: CentralRelation, sigma: CentralRelation):
    """Derived relations to try, in a fixed order; yields (Derived, tag)."""
    h, s, k = rho.arity, sigma.arity, rho.k
    reg = _regime(h, s)
    rho_d = Derived(rho.rel, dv.RHO)

    def tag(d: Derived) -> str:
        return f"{reg}/{d.spec.kind}"

    def emit(d):
        return d, tag(d)

    if s == 1 and h == 2:
        yield emit(dv.tau(rho, sigma))
        g2 = dv.gamma_t(rho, sigma, 2)
        yield emit(dv.intersect(g2, rho_d))
        yield emit(dv.gamma_binary(rho, sigma))
        for t in range(3, k + 1):
            yield emit(dv.gamma_t(rho, sigma, t))
    elif s == 1:
        for n in range(h - 1, k + 1):
            yield emit(dv.alpha_n(rho, sigma, n))
        for j in range(1, dv.chain_block_count(rho) + 1):
            yield emit(dv.beta_chain(rho, sigma, j))
    elif s == h:
        g = dv.rho_cap_sigma(rho, sigma)
        yield emit(g)
        for pos in dv.ALPHA1_POSITIONS:
            a1 = dv.alpha1_of(g.relation, pos, g.spec)
            yield emit(dv.intersect(a1, rho_d))
            yield emit(a1)
        for t in range(h, k + 1):
            yield emit(dv.beta_t(rho, g, t))
    elif h < s:
        for t in range(h, s):
            yield emit(dv.theta_up(rho, sigma, t))
        yield emit(dv.gamma_s_rel(rho, sigma))
        for t in range(s, k + 1):
            yield emit(dv.gamma_prime_t(rho, sigma, t))
        yield emit(dv.gamma_prime(rho, sigma))
    else:
        for t in range(s, h):
            yield emit(dv.theta_down(rho, sigma, t))
        for t in range(h, k + 1):
            yield emit(dv.theta_common(rho, sigma, t))
        yield emit(dv.gamma_prime_h(rho, sigma))
        for n in range(1, dv.chain_block_count(rho) + 1):
            yield emit(dv.gamma_prime_chain(rho, sigma, n))


def _useful(d: Relation, rho: CentralRelation, sigma: CentralRelation) -> str | None:
    """Reason to skip a candidate outright, or None."""
    if d.is_full():
        return "delta is full"
    if d.is_empty():
        return "delta is empty"
    if d.arity == rho.arity and d == rho.rel:
        return "delta equals rho"
    if d.arity == sigma.arity and d == sigma.rel:
        return "delta equals sigma"
    return None


def _values_surviving(rows: np.ndarray, rel: Relation, c: int, values: np.ndarray):
    """Filter candidate value rows to those for which the pattern operation
    with these rows and default c preserves rel (central-default case)."""
    cols = rows.T
    h = rel.arity
    pv = place_values(rel.k, h)
    combos = all_tuples_idx(cols.shape[0], h)
    row_ok = rel.bits[np.einsum("chq,h->cq", cols[combos], pv)].all(axis=1)
    active = combos[row_ok]
    if not active.size:
        return values
    return values[rel.bits[values[:, active] @ pv].all(axis=1)]


def _fillers(b, k):
    seen = []
    for x in (*b, *range(k)):
        if x not in seen:
            seen.append(x)
    return seen


def gadget_separator(rho: CentralRelation, preserve: list[Relation], violate: Relation,
                     defaults=None, split: bool = False):
    """First gadget operation preserving every relation in ``preserve``
    (rho must be among them) whose rows lie in ``violate`` and whose value
    row does not.  Returns (op, rows) or None.

    Tries forbidden tuples of rho in rank order, each possible filler, each
    default in ``defaults`` (centre of rho by default) and, with ``split``,
    the split position family plus an all-distinct extra row.
    """
    k, h, n = rho.k, rho.arity, violate.arity
    if n < h or n > MAX_GADGET_WIDTH:
        return None
    outside = np.flatnonzero(~violate.bits)
    if not outside.size or outside.size > MAX_GADGET_VALUES:
        return None
    values = np.stack([(outside // k ** (n - 1 - i)) % k for i in range(n)], axis=1)
    defaults = sorted(rho.center) if defaults is None else list(defaults)
    families = [(tuple(itertools.combinations(range(n), h)), False)]
    if split and h < n <= k:
        families.append((split_family(h, n), True))
    forbidden = [decode(int(r), k, h) for r in np.flatnonzero(~rho.rel.bits)]
    for family, with_extra in families:
        for c in defaults:
            extras = [()]
            if with_extra:
                rest = [x for x in range(k) if x != c]
                extras = [((c, *p),) for p in itertools.permutations(rest, n - 1)
                          if (c, *p) in violate]
            for extra in extras:
                for b in forbidden:
                    for fill in _fillers(b, k):
                        spec = GadgetSpec(b, n, (0,) * n, c, family, fill, extra)
                        rows = spec.rows()
                        if not violate.bits[rows @ place_values(k, n)].all():
                            continue
                        if len({tuple(x) for x in rows.T.tolist()}) != n:
                            continue
                        vals = values
                        slow = []
                        for rel in preserve:
                            if default_is_central(rel, c):
                                vals = _values_surviving(rows, rel, c, vals)
                            else:
                                slow.append(rel)
                            if not len(vals):
                                break
                        if not len(vals):
                            continue
                        if slow and k ** len(rows) > MAX_FALLBACK_TABLE:
                            continue
                        for v in vals[:64]:
                            f = PatternOperation(k, len(rows), rows.T, v, c)
                            if all(pattern_preserves(f, rel) for rel in slow):
                                return f, tuple(tuple(int(x) for x in y) for y in rows)
    return None


@dataclass
class _Attempt:
    tag: str
    spec: str
    stage: int
    outcome: str

    def to_json(self) -> dict:
        return {"tag": self.tag, "spec": self.spec, "stage": self.stage, "outcome": self.outcome}


def _search(preserve, violate, arity, budget):
    try:
        return find_separator(OpQuery(preserve, violate, max_arity=arity, budget=budget)), None
    except SearchExhausted as exc:
        return None, f"budget exhausted at arity {exc.arity}"
    except BudgetExceeded as exc:
        return None, str(exc)


def attempt_certificate(rho, sigma, max_arity: int = DEFAULT_SEPARATOR_ARITY,
                        budget: int = DEFAULT_NODE_BUDGET, report: list | None = None,
                        use_gadgets: bool = True) -> Certificate | None:
    """Run the catalogue without consulting the classifier.

    Stage 1 looks for unary separators for every candidate.  Stage 2 searches
    f_mid up to ``max_arity`` (gadget fallback) and tries a gadget before a
    bounded search for g_top.
    """
    rho, sigma = validate_central(rho), validate_central(sigma)
    cands = []
    seen = set()
    for d, tag in delta_candidates(rho, sigma):
        key = (d.relation.arity, d.relation.bits.tobytes())
        skip = _useful(d.relation, rho, sigma)
        if skip is None and key in seen:
            skip = "duplicate of an earlier candidate"
        seen.add(key)
        if skip is not None:
            if report is not None:
                report.append(_Attempt(tag, d.spec.describe(), 0, skip))
            continue
        cands.append((d, tag))

    def witness(op, rel, given):
        if given is not None:
            return given
        found = find_violation_columns(op, rel)
        return found[0] if found else None

    def finish(d, tag, f, g, arity, how="", fw=None, gw=None):
        cert = Certificate(rho.rel, sigma.rel, d.relation, d.spec, f, g, tag + how,
                           witness(f, sigma.rel, fw), witness(g, d.relation, gw), arity)
        check = verify_certificate(rho, sigma, cert)
        if not check:
            raise RuntimeError(f"internal inconsistency: built certificate fails clause "
                               f"{check.clause}: {check.message}")
        return cert

    def note(d, tag, stage, why):
        if report is not None:
            report.append(_Attempt(tag, d.spec.describe(), stage, why))

    for d, tag in cands:
        f, why = _search([rho.rel, d.relation], [sigma.rel], 1, budget)
        if f is None:
            note(d, tag, 1, why or "no unary f_mid")
            continue
        g, why = _search([rho.rel], [d.relation], 1, budget)
        if g is None:
            note(d, tag, 1, why or "no unary g_top")
            continue
        return finish(d, tag, f, g, max_arity)
    if max_arity < 2 and not use_gadgets:
        return None
    shared = sorted(rho.center, key=lambda c: (c not in sigma.center, c))
    for d, tag in cands:
        how, fw, gw = "", None, None
        f, why = _search([rho.rel, d.relation], [sigma.rel], max_arity, budget)
        if f is None and use_gadgets:
            found = gadget_separator(rho, [rho.rel, d.relation], sigma.rel, shared)
            if found is not None:
                (f, fw), how = found, "+gadget"
        if f is None:
            note(d, tag, 2, why or "no f_mid")
            continue
        g = None
        if use_gadgets:
            found = gadget_separator(rho, [rho.rel], d.relation, shared, split=True)
            if found is not None:
                (g, gw), how = found, "+gadget"
        if g is None:
            g, why = _search([rho.rel], [d.relation], max_arity, budget)
        if g is None:
            note(d, tag, 2, why or "no g_top")
            continue
        return finish(d, tag, f, g, max_arity, how, fw, gw)
    return None


def find_certificate(rho, sigma, max_arity: int = DEFAULT_SEPARATOR_ARITY,
                     budget: int = DEFAULT_NODE_BUDGET, report: list | None = None
                     ) -> Certificate | None:
    """Certificate of non-maximality, or None when nothing was found within
    the bounds (not a proof of maximality).  Attempts are appended to
    ``report`` when a list is supplied."""
    result = classify(rho, sigma)
    if result.verdict != "NotSubmaximal":
        raise RelationError(f"pair is classified {result.verdict}; nothing to certify")
    return attempt_certificate(rho, sigma, max_arity, budget, report)
