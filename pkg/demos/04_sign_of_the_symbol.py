"""The mean forms built from M_Q b and M#(b chi_Q) detect the sign of b.

Run with ``python demos/04_sign_of_the_symbol.py``.  For a constant symbol
c the mean oscillation is zero either way, but the forms that subtract the
maximal function give 2|c| when c is negative and 0 when it is positive.
Shifting |x| down so that it dips below zero leaves the mean oscillation
unchanged but raises the two maximal forms.
"""
import numpy as np

from slicemax import CubeFamily, GridFunction, characterization, decompose_sign

FORMS = ("oscillation_mean", "maximal_mean", "sharp_mean")


def main():
    family = CubeFamily.up_to(16)
    cases = {
        "constant -1": np.full(32, -1.0),
        "constant +1": np.full(32, 1.0),
        "|x| - 0.25": np.abs(np.linspace(-1, 1, 32)) - 0.25,
        "|x|": np.abs(np.linspace(-1, 1, 32)),
    }
    print(f"{'symbol':<14}" + "".join(f"{w:>18}" for w in FORMS) + f"{'sup of b_minus':>16}")
    for name, values in cases.items():
        b = GridFunction(values)
        row = "".join(f"{characterization(b, w, family=family):18.4f}" for w in FORMS)
        neg = decompose_sign(b)
        print(f"{name:<14}{row}{float(np.max(np.abs(neg.b_minus.samples))):16.4f}")


if __name__ == "__main__":
    main()
