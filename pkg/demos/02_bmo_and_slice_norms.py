"""BMO and slice norms of a few corpus functions.

Run with ``python demos/02_bmo_and_slice_norms.py``.  The log singularity has
a BMO norm that settles as the grid is refined, while its sup norm keeps
growing because the cells next to the singularity shrink.  Its L^8 norm
creeps towards a finite limit, since log is integrable to every power, and
the slice norm is already settled at 64 cells.
"""
import numpy as np

from slicemax import GeneratorSpec, SliceParams, bmo_norm, generate, lp_norm, slice_norm
from slicemax.verify import refinement_family

SYMBOLS = ["log:sign=-1,eps=0.001", "step:split=0.5,left=0,right=1", "ramp", "smooth:modes=3,seed=7"]


def main():
    params = SliceParams(t=1 / 16, r=2.4, p=1.5)
    print(f"{'symbol':<32} {'cells':>6} {'BMO':>8} {'sup':>8} {'L^8':>8} {'slice':>8}")
    for text in SYMBOLS:
        spec = GeneratorSpec.parse(text)
        for n in (64, 256, 1024):
            b = generate(spec, (n,), 1 / n)
            print(f"{text:<32} {n:>6} {bmo_norm(b, refinement_family(n)):8.4f} "
                  f"{np.max(np.abs(b.samples)):8.4f} {lp_norm(b, 8):8.4f} {slice_norm(b, params):8.4f}")


if __name__ == "__main__":
    main()
