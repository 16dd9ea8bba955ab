"""Relations derived from a pair (rho, sigma) by fixed primitive-positive shapes.

Every constructor evaluates one formula of the form

    x in R  iff  exists w in W : every clause holds

where a clause asks that some selection of the coordinates of ``(x, w)``
lies in rho, sigma or a previously derived relation.  Because only
conjunction and existential quantification are used, each result lies in the
relational clone generated by its inputs, so every common polymorphism of the
inputs preserves it.  The ``DerivedSpec`` returned alongside each relation is
a transcript sufficient to recompute it.

Index selections come in two flavours: ``strict`` (strictly increasing
positions, i.e. combinations) and ``repeats`` (any positions, repetition
allowed).  Each constructor defaults to the reading of its defining formula;
``index_mode`` overrides it for sensitivity checks.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .relcore import CentralRelation, Domain, Relation, RelationError, all_tuples, place_values

KINDS = (
    "Tau", "GammaBinary", "GammaT", "RhoL", "AlphaN", "BetaChain", "Alpha1Of",
    "BetaT", "Lambda", "GammaPrime", "ThetaUp", "ThetaDown", "GammaS",
    "GammaPrimeT", "GammaPrimeH", "GammaPrimeChain", "ThetaCommon", "Intersect",
    "Rho", "Sigma",
)
INDEX_MODES = ("strict", "repeats")
ALPHA1_POSITIONS = ("lt_h", "all")


@dataclass(frozen=True)
class DerivedSpec:
    """Derivation transcript.

    ``inputs`` holds nested specs (for Alpha1Of, BetaT and Intersect); leaves
    are the ``Rho`` and ``Sigma`` kinds.  ``params`` holds integer parameters
    and the string options ``index_mode``/``positions``.
    """

    kind: str
    params: dict = field(default_factory=dict)
    inputs: tuple = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise RelationError(f"unknown derived kind {self.kind!r}")

    def to_json(self) -> dict:
        out = {"kind": self.kind}
        if self.params:
            out["params"] = dict(sorted(self.params.items()))
        if self.inputs:
            out["inputs"] = [s.to_json() for s in self.inputs]
        return out

    @classmethod
    def from_json(cls, obj) -> "DerivedSpec":
        if isinstance(obj, str):
            obj = {"kind": obj}
        if not isinstance(obj, dict) or "kind" not in obj:
            raise RelationError(f"malformed derived spec: {obj!r}")
        inputs = tuple(cls.from_json(x) for x in obj.get("inputs", ()))
        return cls(obj["kind"], dict(obj.get("params", {})), inputs)

    def describe(self) -> str:
        parts = [f"{k}={v}" for k, v in sorted(self.params.items())]
        inner = ", ".join(s.describe() for s in self.inputs)
        head = self.kind + (f"[{', '.join(parts)}]" if parts else "")
        return f"{head}({inner})" if inner else head


RHO = DerivedSpec("Rho")
SIGMA = DerivedSpec("Sigma")


@dataclass(frozen=True)
class Derived:
    relation: Relation
    spec: DerivedSpec


# ---------------------------------------------------------------------------
# evaluator


def _plain(r) -> Relation:
    return r.rel if isinstance(r, CentralRelation) else r


def _selections(pool: Sequence[int], size: int, mode: str) -> list[tuple[int, ...]]:
    if mode == "strict":
        return list(itertools.combinations(pool, size))
    if mode == "repeats":
        return list(itertools.product(pool, repeat=size))
    raise RelationError(f"index mode must be one of {INDEX_MODES}, got {mode!r}")


def _exists(k: int, arity: int, clauses: Iterable[tuple[Relation, Sequence[int]]],
            witnesses: Iterable[int] | None) -> Relation:
    """Tuples x of E_k^arity with some witness w making every clause true.

    A clause is ``(rel, positions)`` where position ``arity`` refers to w.
    With ``witnesses=None`` there is no quantifier.
    """
    clauses = list({(id(r), tuple(p)): (r, tuple(p)) for r, p in clauses}.values())
    xs = all_tuples(k, arity)
    n = xs.shape[0]
    ext = np.empty((n, arity + 1), dtype=np.int64)
    ext[:, :arity] = xs
    ws = [0] if witnesses is None else sorted(set(witnesses))
    out = np.zeros(n, dtype=bool)
    for w in ws:
        ext[:, arity] = w
        alive = np.ones(n, dtype=bool)
        for rel, pos in clauses:
            pv = place_values(k, len(pos))
            alive &= rel.bits[ext[:, list(pos)] @ pv]
            if not alive.any():
                break
        out |= alive
    return Relation(Domain(k), arity, out)


def _need(cond: bool, msg: str) -> None:
    if not cond:
        raise RelationError(msg)


def _pair(rho, sigma):
    rho, sigma = _plain(rho), _plain(sigma)
    _need(rho.k == sigma.k, f"domain mismatch: {rho.k} vs {sigma.k}")
    return rho, sigma, rho.k, rho.arity, sigma.arity


# ---------------------------------------------------------------------------
# unary sigma, binary rho


def tau(rho, sigma) -> Derived:
    """Elements adjacent under rho to some member of sigma."""
    rho, sigma, k, h, s = _pair(rho, sigma)
    _need(h == 2 and s == 1, "tau needs binary rho and unary sigma")
    rel = _exists(k, 1, [(rho, (1, 0))], sigma.elements())
    return Derived(rel, DerivedSpec("Tau", {}, (RHO, SIGMA)))


def gamma_t(rho, sigma, t: int) -> Derived:
    """t-tuples whose entries share a common rho-neighbour in sigma."""
    rho, sigma, k, h, s = _pair(rho, sigma)
    _need(h == 2 and s == 1, "gamma_t needs binary rho and unary sigma")
    _need(2 <= t <= k, f"gamma_t needs 2 <= t <= k, got t={t}")
    rel = _exists(k, t, [(rho, (i, t)) for i in range(t)], sigma.elements())
    return Derived(rel, DerivedSpec("GammaT", {"t": t}, (RHO, SIGMA)))


def gamma_binary(rho, sigma) -> Derived:
    d = gamma_t(rho, sigma, 2)
    return Derived(d.relation, DerivedSpec("GammaBinary", {}, (RHO, SIGMA)))


def rho_l(rho, l: int) -> Derived:
    """l-tuples whose support is a rho-chain."""
    rho = _plain(rho)
    _need(rho.arity == 2, "rho_l needs binary rho")
    _need(l >= 2, f"rho_l needs l >= 2, got {l}")
    pairs = [(rho, (i, j)) for i in range(l) for j in range(l) if i != j]
    rel = _exists(rho.k, l, pairs, None)
    return Derived(rel, DerivedSpec("RhoL", {"l": l}, (RHO,)))


# ---------------------------------------------------------------------------
# unary sigma, rho of arity >= 3


def alpha_n(rho, sigma, n: int, index_mode: str = "strict") -> Derived:
    rho, sigma, k, h, s = _pair(rho, sigma)
    _need(h >= 3 and s == 1, "alpha_n needs rho of arity >= 3 and unary sigma")
    _need(n >= h - 1, f"alpha_n needs n >= h-1, got n={n}, h={h}")
    clauses = [(rho, (n,) + sel) for sel in _selections(range(n), h - 1, index_mode)]
    rel = _exists(k, n, clauses, sigma.elements())
    return Derived(rel, DerivedSpec("AlphaN", {"n": n, "index_mode": index_mode}, (RHO, SIGMA)))


def beta_chain(rho, sigma, j: int) -> Derived:
    """Arity j(h-1)+1: consecutive (h-1)-blocks after the first coordinate each
    lie in rho together with one shared witness from sigma."""
    rho, sigma, k, h, s = _pair(rho, sigma)
    _need(h >= 3 and s == 1, "beta_chain needs rho of arity >= 3 and unary sigma")
    _need(j >= 1, f"beta_chain needs j >= 1, got {j}")
    arity = j * (h - 1) + 1
    clauses = [(rho, (arity,) + tuple(range(1 + b * (h - 1), 1 + (b + 1) * (h - 1))))
               for b in range(j)]
    rel = _exists(k, arity, clauses, sigma.elements())
    return Derived(rel, DerivedSpec("BetaChain", {"j": j}, (RHO, SIGMA)))


def chain_block_count(rho) -> int:
    """Number of (h-1)-element subsets of E_k avoiding the center of rho."""
    from math import comb
    rho = rho if isinstance(rho, CentralRelation) else None
    _need(rho is not None, "chain_block_count needs a validated central relation")
    free = rho.k - len(rho.center)
    return comb(free, rho.arity - 1)


# ---------------------------------------------------------------------------
# equal arities


def alpha1_of(gamma, positions: str = "lt_h", spec: DerivedSpec | None = None) -> Derived:
    """Tuples that stay in gamma when one coordinate is swapped for a common u.

    ``positions='lt_h'`` substitutes coordinates 1..h-1 only; ``'all'``
    substitutes every coordinate.
    """
    gamma = _plain(gamma)
    h = gamma.arity
    _need(h >= 2, "alpha1_of needs arity >= 2")
    _need(positions in ALPHA1_POSITIONS, f"positions must be one of {ALPHA1_POSITIONS}")
    last = h - 1 if positions == "lt_h" else h
    clauses = []
    for i in range(last):
        pos = list(range(h))
        pos[i] = h
        clauses.append((gamma, tuple(pos)))
    rel = _exists(gamma.k, h, clauses, range(gamma.k))
    inner = spec if spec is not None else DerivedSpec("Rho")
    return Derived(rel, DerivedSpec("Alpha1Of", {"positions": positions}, (inner,)))


def intersect(a: Derived, b: Derived) -> Derived:
    return Derived(a.relation & b.relation, DerivedSpec("Intersect", {}, (a.spec, b.spec)))


def rho_cap_sigma(rho, sigma) -> Derived:
    rho, sigma, k, h, s = _pair(rho, sigma)
    _need(h == s, "rho and sigma must have equal arity")
    return intersect(Derived(rho, RHO), Derived(sigma, SIGMA))


def beta_t(rho, gamma: Derived, t: int, index_mode: str = "strict") -> Derived:
    """For every (h-1)-selection I of the coordinates: gamma holds on
    (x_I minus its last entry, x_1, u) and rho holds on (x_I, u)."""
    rho = _plain(rho)
    g = gamma.relation
    h = rho.arity
    _need(g.arity == h and g.k == rho.k, "beta_t needs gamma with the arity of rho")
    _need(h >= 2 and t >= h, f"beta_t needs t >= h >= 2, got t={t}, h={h}")
    clauses = []
    for sel in _selections(range(t), h - 1, index_mode):
        clauses.append((g, sel[:h - 2] + (0, t)))
        clauses.append((rho, sel + (t,)))
    rel = _exists(rho.k, t, clauses, range(rho.k))
    return Derived(rel, DerivedSpec("BetaT", {"t": t, "index_mode": index_mode}, (RHO, gamma.spec)))


# ---------------------------------------------------------------------------
# h < s


def lambda_pad(rho, s: int) -> Derived:
    """s-tuples whose first h coordinates lie in rho."""
    rho = _plain(rho)
    h = rho.arity
    _need(2 <= h < s, f"lambda needs 2 <= h < s, got h={h}, s={s}")
    rel = _exists(rho.k, s, [(rho, tuple(range(h)))], None)
    return Derived(rel, DerivedSpec("Lambda", {"s": s}, (RHO,)))


def gamma_prime(rho, sigma) -> Derived:
    rho, sigma, k, h, s = _pair(rho, sigma)
    lam = lambda_pad(rho, s)
    rel = lam.relation & sigma
    return Derived(rel, DerivedSpec("GammaPrime", {}, (RHO, SIGMA)))


def theta_up(rho, sigma, t: int, index_mode: str = "strict") -> Derived:
    """Some u puts every (h-1)-selection, followed by u, into rho and the
    tuple padded with u up to arity s into sigma."""
    rho, sigma, k, h, s = _pair(rho, sigma)
    _need(2 <= h <= t <= s - 1, f"theta_up needs 2 <= h <= t <= s-1, got h={h}, t={t}, s={s}")
    clauses = [(rho, sel + (t,)) for sel in _selections(range(t), h - 1, index_mode)]
    clauses.append((sigma, tuple(range(t)) + (t,) * (s - t)))
    rel = _exists(k, t, clauses, range(k))
    return Derived(rel, DerivedSpec("ThetaUp", {"t": t, "index_mode": index_mode}, (RHO, SIGMA)))


def gamma_s_rel(rho, sigma, index_mode: str = "repeats") -> Derived:
    """Members x of sigma such that (x_1, x_I) and (x_2, x_I) lie in rho for
    every (h-1)-selection I."""
    rho, sigma, k, h, s = _pair(rho, sigma)
    _need(2 <= h < s, f"gamma_s needs 2 <= h < s, got h={h}, s={s}")
    clauses = [(sigma, tuple(range(s)))]
    for sel in _selections(range(s), h - 1, index_mode):
        clauses.append((rho, (0,) + sel))
        clauses.append((rho, (1,) + sel))
    rel = _exists(k, s, clauses, None)
    return Derived(rel, DerivedSpec("GammaS", {"index_mode": index_mode}, (RHO, SIGMA)))


def gamma_prime_t(rho, sigma, t: int, index_mode: str = "repeats",
                  index_range: str = "s") -> Derived:
    """Some v with (x_I[:h-1], v) in rho and (x_I, v) in sigma for every
    (s-1)-selection I.  ``index_range='s'`` draws I from the first s
    coordinates (as literally written); ``'t'`` from all t."""
    rho, sigma, k, h, s = _pair(rho, sigma)
    _need(2 <= h < s <= t, f"gamma_prime_t needs 2 <= h < s <= t, got h={h}, s={s}, t={t}")
    _need(index_range in ("s", "t"), "index_range must be 's' or 't'")
    pool = range(s if index_range == "s" else t)
    clauses = []
    for sel in _selections(pool, s - 1, index_mode):
        clauses.append((rho, sel[:h - 1] + (t,)))
        clauses.append((sigma, sel + (t,)))
    rel = _exists(k, t, clauses, range(k))
    params = {"t": t, "index_mode": index_mode, "index_range": index_range}
    return Derived(rel, DerivedSpec("GammaPrimeT", params, (RHO, SIGMA)))


# ---------------------------------------------------------------------------
# s < h


def theta_down(rho, sigma, t: int, index_mode: str = "repeats") -> Derived:
    """Some u puts every (s-1)-selection, followed by u, into sigma and the
    tuple padded with u up to arity h into rho."""
    rho, sigma, k, h, s = _pair(rho, sigma)
    _need(2 <= s <= t <= h - 1, f"theta_down needs 2 <= s <= t <= h-1, got s={s}, t={t}, h={h}")
    clauses = [(sigma, sel + (t,)) for sel in _selections(range(t), s - 1, index_mode)]
    clauses.append((rho, tuple(range(t)) + (t,) * (h - t)))
    rel = _exists(k, t, clauses, range(k))
    return Derived(rel, DerivedSpec("ThetaDown", {"t": t, "index_mode": index_mode}, (RHO, SIGMA)))


def theta_common(rho, sigma, t: int, index_mode: str = "repeats") -> Derived:
    """Some v with (x_I[:s-1], v) in sigma and (x_I, v) in rho for every
    (h-1)-selection I of the t coordinates."""
    rho, sigma, k, h, s = _pair(rho, sigma)
    _need(2 <= s < h <= t, f"theta_common needs 2 <= s < h <= t, got s={s}, h={h}, t={t}")
    clauses = []
    for sel in _selections(range(t), h - 1, index_mode):
        clauses.append((sigma, sel[:s - 1] + (t,)))
        clauses.append((rho, sel + (t,)))
    rel = _exists(k, t, clauses, range(k))
    return Derived(rel, DerivedSpec("ThetaCommon", {"t": t, "index_mode": index_mode}, (RHO, SIGMA)))


def gamma_prime_h(rho, sigma, index_mode: str = "repeats") -> Derived:
    """Some v with (x_2..x_h, v) in rho and (x_I, v) in sigma for every
    (s-1)-selection I."""
    rho, sigma, k, h, s = _pair(rho, sigma)
    _need(2 <= s < h, f"gamma_prime_h needs 2 <= s < h, got s={s}, h={h}")
    clauses = [(rho, tuple(range(1, h)) + (h,))]
    clauses += [(sigma, sel + (h,)) for sel in _selections(range(h), s - 1, index_mode)]
    rel = _exists(k, h, clauses, range(k))
    return Derived(rel, DerivedSpec("GammaPrimeH", {"index_mode": index_mode}, (RHO, SIGMA)))


def gamma_prime_chain(rho, sigma, n: int, index_mode: str = "repeats") -> Derived:
    """Arity n(h-1)+1: each (h-1)-block after the first coordinate, followed
    by a shared v, lies in rho, and every (s-1)-selection followed by v lies
    in sigma."""
    rho, sigma, k, h, s = _pair(rho, sigma)
    _need(2 <= s < h, f"gamma_prime_chain needs 2 <= s < h, got s={s}, h={h}")
    _need(n >= 1, f"gamma_prime_chain needs n >= 1, got {n}")
    arity = n * (h - 1) + 1
    clauses = [(rho, tuple(range(1 + b * (h - 1), 1 + (b + 1) * (h - 1))) + (arity,))
               for b in range(n)]
    clauses += [(sigma, sel + (arity,)) for sel in _selections(range(arity), s - 1, index_mode)]
    rel = _exists(k, arity, clauses, range(k))
    return Derived(rel, DerivedSpec("GammaPrimeChain", {"n": n, "index_mode": index_mode}, (RHO, SIGMA)))


# ---------------------------------------------------------------------------
# replay


def evaluate(spec: DerivedSpec, rho, sigma) -> Relation:
    """Recompute the relation a transcript describes."""
    rho, sigma = _plain(rho), _plain(sigma)
    p = spec.params
    kind = spec.kind
    mode = p.get("index_mode")
    opt = {"index_mode": mode} if mode else {}
    if kind == "Rho":
        return rho
    if kind == "Sigma":
        return sigma
    if kind == "Intersect":
        _need(len(spec.inputs) == 2, "Intersect needs two inputs")
        return evaluate(spec.inputs[0], rho, sigma) & evaluate(spec.inputs[1], rho, sigma)
    if kind == "Alpha1Of":
        _need(len(spec.inputs) == 1, "Alpha1Of needs one input")
        inner = evaluate(spec.inputs[0], rho, sigma)
        return alpha1_of(inner, p.get("positions", "lt_h")).relation
    if kind == "BetaT":
        _need(len(spec.inputs) == 2, "BetaT needs rho and gamma inputs")
        g = evaluate(spec.inputs[1], rho, sigma)
        return beta_t(rho, Derived(g, spec.inputs[1]), int(p["t"]), **opt).relation
    if kind == "Tau":
        return tau(rho, sigma).relation
    if kind == "GammaBinary":
        return gamma_binary(rho, sigma).relation
    if kind == "GammaT":
        return gamma_t(rho, sigma, int(p["t"])).relation
    if kind == "RhoL":
        return rho_l(rho, int(p["l"])).relation
    if kind == "AlphaN":
        return alpha_n(rho, sigma, int(p["n"]), **opt).relation
    if kind == "BetaChain":
        return beta_chain(rho, sigma, int(p["j"])).relation
    if kind == "Lambda":
        return lambda_pad(rho, int(p["s"])).relation
    if kind == "GammaPrime":
        return gamma_prime(rho, sigma).relation
    if kind == "ThetaUp":
        return theta_up(rho, sigma, int(p["t"]), **opt).relation
    if kind == "ThetaDown":
        return theta_down(rho, sigma, int(p["t"]), **opt).relation
    if kind == "ThetaCommon":
        return theta_common(rho, sigma, int(p["t"]), **opt).relation
    if kind == "GammaS":
        return gamma_s_rel(rho, sigma, **opt).relation
    if kind == "GammaPrimeT":
        return gamma_prime_t(rho, sigma, int(p["t"]), index_range=p.get("index_range", "s"),
                             **opt).relation
    if kind == "GammaPrimeH":
        return gamma_prime_h(rho, sigma, **opt).relation
    if kind == "GammaPrimeChain":
        return gamma_prime_chain(rho, sigma, int(p["n"]), **opt).relation
    raise RelationError(f"cannot evaluate kind {kind!r}")
