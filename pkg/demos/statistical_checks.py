"""Monte Carlo checks of the measure statements, small enough to run in seconds.

A check samples x (or a random path), counts the samples whose deviation ever
exceeds the explicit bound on the grid, and compares the Wilson 99% upper
limit of the violation fraction with delta.  Seeds fix every draw, so the
reports are byte-identical across thread counts.
"""

from effdioph.counting import SequenceSpec
from effdioph.psi import parse_psi
from effdioph.slln import parse_rv, simulate_slln
from effdioph.verify import GridSpec, check_normal, mc_check_m0_lacunary, mc_check_schmidt


def summary(r):
    lo, hi = r.wilson
    print(f"{r.theorem:>13}: {r.violators}/{r.samples} violators, wilson [{lo:.4f}, {hi:.4f}], "
          f"delta {r.delta} -> {r.verdict}")


grid = GridSpec("geometric", 10, 10 ** 5, 16)
summary(mc_check_schmidt(parse_psi("inv:1;cap=0.4"), 1.0, 0.1, 200, grid, seed=1))
summary(mc_check_m0_lacunary(SequenceSpec.powers_of_two(), parse_psi("pow:1,2"), 0.0, 1.0, 0.2, 200,
                             GridSpec("linear", 1, 40, 40), seed=2, along="index"))
summary(check_normal(7, 10, grid, 1.0, 0.1, samples=200, seed=3))
summary(simulate_slln(parse_rv("bernoulli:0.5"), 1.0, 0.1, grid, 200, seed=4))

# Single-threaded and four-threaded runs agree byte for byte.
a = mc_check_schmidt(parse_psi("const:0.3"), 1.0, 0.1, 100, grid, seed=5).to_json()
b = mc_check_schmidt(parse_psi("const:0.3"), 1.0, 0.1, 100, grid, seed=5, threads=4).to_json()
print("\nthreads 1 vs 4 identical:", a == b)
