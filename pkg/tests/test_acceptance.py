"""Acceptance criteria 1-10, each at its stated scale and tolerance.

Every criterion runs its verification suite with the default settings and
fails if any criterion row of that suite fails; diagnostic rows are printed
but not asserted.  One PASS/FAIL line per criterion is printed in the
terminal summary (see ``conftest.py``).
"""

import pytest

from coaltangent.config import parse_pairs
from coaltangent.suites import CRITERIA, run_suite

SEED = 20240611

ACCEPTANCE_LINES = []

CASES = sorted(CRITERIA.items(), key=lambda kv: kv[1])


@pytest.fixture(scope="module")
def out_dir(tmp_path_factory):
    return tmp_path_factory.mktemp("acceptance")


@pytest.mark.acceptance
@pytest.mark.parametrize("suite,number", CASES, ids=[f"criterion{n:02d}_{s}" for s, n in CASES])
def test_criterion(suite, number, out_dir):
    cfg = parse_pairs([("seed", str(SEED)), ("out", str(out_dir / suite))])
    reports = run_suite(cfg, [suite])
    rows = [r for r in reports if r.role == "criterion"]
    ok = bool(rows) and all(r.passed for r in rows)
    detail = "; ".join(f"{r.name}={r.value:.4g}" for r in rows)
    ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'} criterion {number:2d} ({suite}): {detail}")
    for r in reports:
        print(r.line())
    assert ok, "\n".join(r.line() for r in rows if not r.passed)
