"""A tour of the explicit constants.

Run with ``python3 demos/constants_tour.py``.  Each bundle prints its inputs,
outputs and any warnings; huge thresholds are carried in log space.
"""

from effdioph.constants import (abh_constants, est_constants, normal_constants, slln_constants,
                                m0_lacunary_constants)
from effdioph.counting import SequenceSpec
from effdioph.psi import parse_psi
from effdioph.verify import lemma43_constant


def show(title, bundle):
    print(f"\n== {title}")
    for k, v in bundle.as_dict()["outputs"].items():
        print(f"  {k:>20} = {v}")
    for w in bundle.warnings:
        print(f"  warning: {w}")


# A capped harmonic psi makes the search threshold astronomically large,
# while a constant psi stays in the direct range.
show("Schmidt, psi = min(0.4, 1/q)", est_constants(1.0, 0.1, parse_psi("inv:1;cap=0.4")))
show("Schmidt, psi = 0.4", est_constants(1.0, 0.1, parse_psi("const:0.4")))

# The coprime bound needs a second-moment constant calC; here it is a guess.
show("coprime counts, C = 16, calC = 1", abh_constants(16, 0.5, 1.0))

show("lacunary q_n = 2^n, psi(q_n) = 1/n^2",
     m0_lacunary_constants(SequenceSpec.powers_of_two(), parse_psi("pow:1,2"), 1.0, 0.2, along="index"))
show("digit frequencies in base 10", normal_constants(1.0, 0.1, 10))
show("strong law, sigma^2 = 1, F~ = 1", slln_constants(1.0, 0.1, 1.0, [1.0] * 1000))

print(f"\nweighted coprimality constant: {lemma43_constant():.12f} (< 40.6)")
