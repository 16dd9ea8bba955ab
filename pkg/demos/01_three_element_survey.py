"""Every ordered pair of central relations on a three-element set.

Run with ``python demos/01_three_element_survey.py``.
"""

from collections import Counter

from centralclones.catalog import central_relations
from centralclones.relcore import write_relation
from centralclones.survey import pairs, run_survey

stars = central_relations(3, 2)
print(f"{len(stars)} binary central relations, {len(central_relations(3, 1))} unary ones,"
      f" {len(central_relations(3, 3))} ternary ones\n")
print("The binary ones are stars: the diagonal plus every pair touching one point.")
print(write_relation(stars[0].rel), "\n")

survey = run_survey(3)
print(f"{'rho center':>10}  {'sigma':<28} verdict")
for row, (rho, sigma) in zip(survey.rows, pairs(3)):
    sig = (sorted(sigma.rel.elements()) if sigma.arity == 1
           else f"star at {min(sigma.center)}")
    extra = (row.certificate["lemma_tag"] if row.certificate
             else row.interpolation["status"] if row.interpolation else "")
    print(f"{str(sorted(rho.center)):>10}  {str(sig):<28} {row.verdict:<14} {extra}")

print("\nverdicts:", dict(Counter(r.verdict for r in survey.rows)))
print("rows with problems:", len(survey.inconsistent))
