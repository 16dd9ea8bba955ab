"""Pairwise surveys: classify every ordered pair of central relations on E_k
and back each verdict with a certificate or an interpolation run."""

from __future__ import annotations

import json
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .catalog import central_relations, relation_id
from .certify import (DEFAULT_NODE_BUDGET, DEFAULT_SEPARATOR_ARITY, attempt_certificate,
                      find_certificate, verify_certificate)
from .classifier import check_evidence, classify
from .interp import interpolate
from .polycheck import (BudgetExceeded, OpQuery, SearchExhausted, enumerate_ops,
                        find_separator, preserves)
from .relcore import CentralRelation, RelationError

SCHEMA = 1
ID_ALGORITHM = "sha256 of the canonical text serialization"


@dataclass
class SurveyRow:
    rho_id: str
    sigma_id: str
    rho_arity: int
    sigma_arity: int
    verdict: str
    evidence: dict
    evidence_ok: bool
    certificate: dict | None = None
    interpolation: dict | None = None
    cross_check: str | None = None
    consistent: bool = True
    problems: list[str] = field(default_factory=list)
    seconds: float = 0.0

    def to_json(self, timings: bool = False) -> dict:
        out = {"rho_id": self.rho_id, "sigma_id": self.sigma_id,
               "rho_arity": self.rho_arity, "sigma_arity": self.sigma_arity,
               "verdict": self.verdict, "evidence": self.evidence,
               "evidence_ok": self.evidence_ok, "certificate": self.certificate,
               "interpolation": self.interpolation, "cross_check": self.cross_check,
               "consistent": self.consistent, "problems": self.problems}
        if timings:
            out["seconds"] = round(self.seconds, 3)
        return out


@dataclass
class Survey:
    k: int
    max_arity: int
    separator_arity: int
    budget: int
    rows: list[SurveyRow]
    cross_checked: bool

    @property
    def inconsistent(self) -> list[SurveyRow]:
        return [r for r in self.rows if not r.consistent]

    def verdict_counts(self) -> dict:
        return dict(sorted(Counter(r.verdict for r in self.rows).items()))

    def to_json(self, timings: bool = False) -> dict:
        return {"schema": SCHEMA, "k": self.k, "max_arity": self.max_arity,
                "id_algorithm": ID_ALGORITHM, "separator_max_arity": self.separator_arity,
                "node_budget": self.budget, "cross_checked": self.cross_checked,
                "summary": {"rows": len(self.rows), "verdicts": self.verdict_counts(),
                            "inconsistent": len(self.inconsistent)},
                "rows": [r.to_json(timings) for r in self.rows]}

    def dumps(self, timings: bool = False) -> str:
        return json.dumps(self.to_json(timings), indent=1, sort_keys=True)


def pairs(k: int, max_arity: int = 3):
    """Ordered pairs (rho, sigma): rho central of arity >= 2, sigma central, distinct."""
    rels = {a: central_relations(k, a) for a in range(1, max_arity + 1)}
    for h in range(2, max_arity + 1):
        for rho in rels[h]:
            for s in range(1, max_arity + 1):
                for sigma in rels[s]:
                    if s == h and sigma.rel == rho.rel:
                        continue
                    yield rho, sigma


def first_gap_operation(rho: CentralRelation, sigma: CentralRelation, budget: int):
    """Lex-first operation (arity <= 2) in Pol rho but not in Pol sigma."""
    try:
        return find_separator(OpQuery([rho.rel], [sigma.rel], max_arity=2, budget=budget))
    except SearchExhausted:
        return None


def demo_target(rho: CentralRelation, sigma: CentralRelation):
    """Fixed unary target: first unary op in Pol rho outside Pol sigma (else identity)."""
    first = None
    for f in enumerate_ops(rho.k, 1):
        if preserves(f, rho.rel):
            if first is None and f.table.tolist() == list(range(rho.k)):
                first = f
            if not preserves(f, sigma.rel):
                return f
    return first


def interpolation_demo(rho, sigma, budget: int, seed: int) -> dict:
    g = first_gap_operation(rho, sigma, budget)
    if g is None:
        return {"status": "SKIPPED", "reason": "no gap operation found within bounds"}
    target = demo_target(rho, sigma)
    try:
        t = interpolate(rho, sigma, g, target, seed=seed)
    except BudgetExceeded as exc:
        return {"status": "SKIPPED", "reason": str(exc)}
    return {"status": "PASS" if t.ok else "FAIL", "case": t.case, "m": t.m, "q": t.q,
            "g": g.table.tolist(), "target": target.table.tolist(),
            "checks": {name: c["ok"] for name, c in t.checks.items()}}


def survey_row(rho, sigma, separator_arity: int = DEFAULT_SEPARATOR_ARITY,
               budget: int = DEFAULT_NODE_BUDGET, seed: int = 0, interp: bool = True,
               cross_check: bool = False):
    """One survey row, plus the certificate JSON when one was built."""
    t0 = time.perf_counter()
    res = classify(rho, sigma)
    row = SurveyRow(relation_id(rho), relation_id(sigma), rho.arity, sigma.arity,
                    res.verdict, res.evidence, check_evidence(rho, sigma, res))
    cert_json = None
    if res.verdict == "NotSubmaximal":
        cert = find_certificate(rho, sigma, separator_arity, budget)
        if cert is None:
            row.problems.append("no certificate found within bounds")
        else:
            ok = bool(verify_certificate(rho, sigma, cert))
            row.certificate = {"lemma_tag": cert.lemma_tag, "verified": ok,
                               "delta_arity": cert.delta.arity,
                               "f_mid_arity": cert.f_mid.arity, "g_top_arity": cert.g_top.arity}
            cert_json = cert.to_json()
            if not ok:
                row.problems.append("certificate failed verification")
    else:
        if not row.evidence_ok:
            row.problems.append("evidence does not re-validate")
        if interp:
            row.interpolation = interpolation_demo(rho, sigma, budget, seed)
            if row.interpolation["status"] == "FAIL":
                row.problems.append("interpolation post-check failed")
        if cross_check:
            cert = attempt_certificate(rho, sigma, separator_arity, budget)
            if cert is not None and verify_certificate(rho, sigma, cert):
                row.cross_check = f"certificate found ({cert.lemma_tag})"
                row.problems.append("verified certificate for a maximal pair")
            else:
                row.cross_check = "no certificate"
    row.consistent = not row.problems
    row.seconds = time.perf_counter() - t0
    return row, cert_json


def _row_job(args):
    return survey_row(*args)


def run_survey(k: int, max_arity: int = 3, separator_arity: int = DEFAULT_SEPARATOR_ARITY,
               budget: int = DEFAULT_NODE_BUDGET, seed: int = 0, cert_dir: str | None = None,
               interp: bool = True, cross_check: bool | None = None, progress=None,
               jobs: int = 1) -> Survey:
    """Survey every ordered pair.  ``cross_check`` (default: on for k = 3)
    also runs the certificate search on maximal pairs and flags any hit.
    With ``jobs > 1`` rows are computed in worker processes; the output order
    (and content) does not depend on ``jobs``."""
    if k not in (3, 4):
        raise RelationError("surveys support k = 3 and k = 4")
    if cross_check is None:
        cross_check = k == 3
    out_dir = Path(cert_dir) if cert_dir else None
    if out_dir:
        out_dir.mkdir(parents=True, exist_ok=True)
    work = [(rho, sigma, separator_arity, budget, seed, interp, cross_check)
            for rho, sigma in pairs(k, max_arity)]
    if jobs > 1 and len(work) > 1:
        pool = ProcessPoolExecutor(max_workers=jobs)
        results = pool.map(_row_job, work, chunksize=4)
    else:
        pool = None
        results = map(_row_job, work)
    rows = []
    try:
        for row, cert_json in results:
            if out_dir and cert_json is not None:
                path = out_dir / f"{row.rho_id[:16]}_{row.sigma_id[:16]}.json"
                path.write_text(json.dumps(cert_json, sort_keys=True))
                row.certificate["path"] = str(path)
            rows.append(row)
            if progress is not None:
                progress(row)
    finally:
        if pool is not None:
            pool.shutdown()
    return Survey(k, max_arity, separator_arity, budget, rows, cross_check)
