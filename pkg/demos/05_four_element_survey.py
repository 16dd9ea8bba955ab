"""The full survey on four elements (takes a few minutes).

Every one of the 1014 ordered pairs is classified; negative verdicts get a
verified certificate and positive ones an interpolation demo where the
table budget allows.
"""

import time
from collections import Counter

from centralclones.survey import run_survey

t0 = time.perf_counter()
survey = run_survey(4)
print(f"{len(survey.rows)} pairs in {time.perf_counter() - t0:.0f}s")
print("verdicts:", survey.verdict_counts())
print("certificate kinds:", dict(Counter(r.certificate["lemma_tag"]
                                          for r in survey.rows if r.certificate).most_common()))
print("interpolation demos:", dict(Counter((r.interpolation or {}).get("status")
                                           for r in survey.rows if r.verdict != "NotSubmaximal")))
print("inconsistent rows:", len(survey.inconsistent))
