import itertools

import pytest

from centralclones.relcore import Relation, diagonal


def star(k: int, c: int) -> Relation:
    """Binary relation: the diagonal plus every pair touching c."""
    return Relation.from_tuples(k, 2, [(a, b) for a in range(k) for b in range(k)
                                       if a == b or c in (a, b)])


def sym_pair(k: int, a: int, b: int) -> Relation:
    return diagonal(k, 2) | Relation.from_tuples(k, 2, [(a, b), (b, a)])


def contains(k: int, y: int) -> Relation:
    """Ternary: tuples with a repeat or containing y."""
    return Relation.from_tuples(k, 3, [t for t in itertools.product(range(k), repeat=3)
                                       if len(set(t)) < 3 or y in t])


def unary(k: int, *els: int) -> Relation:
    return Relation.unary(k, els)


@pytest.fixture
def star0():
    return star(3, 0)


_CRITERIA: dict[int, tuple[bool, str]] = {}


def record_criterion(n: int, ok: bool, detail: str) -> None:
    """Remember an acceptance criterion outcome for the end-of-run summary."""
    prev = _CRITERIA.get(n)
    if prev is not None:
        ok = ok and prev[0]
        detail = prev[1] + "; " + detail
    _CRITERIA[n] = (ok, detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        ok, detail = _CRITERIA[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'} - {detail}")
