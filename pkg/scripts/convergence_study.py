"""Refinement studies: first eigenvalues on S^2, T^2 and S^1 with Richardson estimates, and the
behaviour of both duality relations under refinement and weight reversal.

Writes CSV tables next to the given prefix.
"""
import argparse
import csv

import numpy as np

from weighted_hodge import mesh as M
from weighted_hodge import spectra as S
from weighted_hodge.discrete import assemble


def write(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    print(f"wrote {path}")


def eigen_sweeps(prefix):
    rows = S.convergence_sweep("icosphere", [1, 2, 3, 4], 0, 3)
    hs = [r["h"] for r in rows]
    lam = [r["eigenvalues"][0] for r in rows]
    print(f"S^2 lambda''_1,0: {np.round(lam, 5)} -> Richardson {S.richardson(hs[1:], lam[1:]):.6f} (exact 2)")
    write(f"{prefix}_sphere.csv", ["level", "h", "lambda_1", "lambda_2", "lambda_3"],
          [[r["level"], r["h"], *r["eigenvalues"]] for r in rows])
    torus = []
    for n in (8, 16, 32):
        ev = S.coexact_spectrum(assemble(M.flat_torus(n, n), "0", 4), 0, 4).eigenvalues
        torus.append([n, 1.0 / n, *(ev / (4 * np.pi ** 2))])
    print("T^2 lambda / 4 pi^2:", [round(float(r[2]), 5) for r in torus])
    write(f"{prefix}_torus.csv", ["n", "h", "ratio_1", "ratio_2", "ratio_3", "ratio_4"], torus)


def duality_study(prefix):
    rows = []
    for weight in ("0", "0.3*x1", "x1^2"):
        for lev in (1, 2, 3):
            WC = assemble(M.icosphere(lev), weight, 4)
            WR = assemble(M.icosphere(lev), f"-({weight})", 4)
            coex0 = S.coexact_spectrum(WC, 0, 1).eigenvalues[0]
            exact1 = S.exact_spectrum(WC, 1, 1, "projection").eigenvalues[0]
            exact2 = S.exact_spectrum(WC, 2, 1, "projection").eigenvalues[0]
            coex0_rev = S.coexact_spectrum(WR, 0, 1).eigenvalues[0]
            rows.append([weight, lev, coex0, exact1, exact2, coex0_rev])
            print(f"f={weight:7s} level {lev}: coexact_0 {coex0:.6f}  exact_1 {exact1:.6f}  "
                  f"exact_2 {exact2:.6f}  coexact_0(-f) {coex0_rev:.6f}")
    write(f"{prefix}_duality.csv",
          ["weight", "level", "coexact_0", "exact_1", "exact_2", "coexact_0_reversed_weight"], rows)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--prefix", default="convergence")
    args = ap.parse_args()
    eigen_sweeps(args.prefix)
    duality_study(args.prefix)


if __name__ == "__main__":
    main()
