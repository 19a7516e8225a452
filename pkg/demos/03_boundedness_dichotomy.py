"""Commutator ratios track the symbol's oscillation.

Run with ``python demos/03_boundedness_dichotomy.py``.  For a symbol in BMO
(the log singularity) the operator ratio and both symbol quantities stay
roughly level as the grid is refined.  For an unbounded-oscillation symbol
(a ramp on a growing domain with fixed cell size) all three grow together.
"""
from slicemax import ExponentSet, generate
from slicemax.verify import (
    CANONICAL_BMO_SYMBOL,
    DEFAULT_TEST_FUNCTIONS,
    OPERATOR_FORMS,
    RAMP_SYMBOL,
    equivalence_quantities,
    refinement_family,
)

ALPHA, T = 0.25, 1 / 16


def table(title, symbol, grids):
    exps = ExponentSet.from_alpha(ALPHA, 1, 1.5, 1.5)
    print(title)
    for op, (slice_form, mean_form) in OPERATOR_FORMS.items():
        print(f"  {op}")
        for n, h in grids:
            b = generate(symbol, (n,), h)
            fs = [generate(s, (n,), h) for s in DEFAULT_TEST_FUNCTIONS]
            q = equivalence_quantities(op, b, fs, exps, T, refinement_family(n))
            print(f"    cells {n:>4}  h {h:.5f}  ratio {q['operator_ratio']:8.4f}  "
                  f"{slice_form} {q[slice_form]:8.4f}  {mean_form} {q[mean_form]:8.4f}")


def main():
    table("log symbol, unit domain refined", CANONICAL_BMO_SYMBOL, [(n, 1 / n) for n in (64, 128, 256)])
    table("ramp symbol, domain grown at h = 1/64", RAMP_SYMBOL, [(n, 1 / 64) for n in (64, 128, 256)])


if __name__ == "__main__":
    main()
