"""Run the pointwise and integral identity checks on every flat domain and print a residual table."""
import argparse

import numpy as np

from weighted_hodge import identity_lab as lab
from weighted_hodge.fields import parse_field, random_form, random_polynomial
from weighted_hodge.quadrature import FlatDomain


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--cases", type=int, default=100)
    ap.add_argument("--order", type=int, default=28)
    args = ap.parse_args()

    for dim in (2, 3):
        worst = max(r.abs_residual for s in range(args.cases)
                    for r in lab.pointwise_suite(lab.random_pointwise_case(args.seed + s, dim), 1e-10))
        print(f"pointwise R^{dim}: {args.cases} cases, max residual {worst:.2e}")

    rng = np.random.default_rng(args.seed)
    domains = {"ball2": FlatDomain.ball(2), "ball3": FlatDomain.ball(3),
               "annulus2": FlatDomain.annulus(2), "annulus3": FlatDomain.annulus(3)}
    print(f"\n{'domain':10s} {'identity':28s} {'rel residual':>12s}")
    for name, dom in domains.items():
        D = dom.dim
        f = random_polynomial(rng, D, 2, 0.3)
        V = parse_field("2 + x1^2/2", D)
        for q in range(D + 1):
            om = random_form(rng, q, D, 2, 0.5)
            reports = [lab.check_green_laplacian(om, f, dom, args.order)]
            if q < D:
                reports.append(lab.check_green(om, random_form(rng, q + 1, D, 2, 0.5), f, dom, args.order))
                F = [random_polynomial(rng, D, 2, 0.5) for _ in range(D)]
                reports.append(lab.check_pohozhaev(om, F, f, dom, args.order))
            reports += [lab.check_reilly(om, f, V, dom, args.order, form) for form in ("normal", "star")]
            for r in reports:
                print(f"{name:10s} {r.identity_id:28s} {r.rel_residual:12.2e}")


if __name__ == "__main__":
    main()
