"""Evaluate the boundary-spectrum, Steklov and Levitin-Parnovski checks over a grid of weights."""
import argparse

from weighted_hodge import spectra as S


def show(label, chk):
    print(f"{label:38s} computed {chk.computed:9.5f}  bound {chk.bound:9.5f}  "
          f"margin {chk.margin:+.5f}  {'pass' if chk.passed else 'FAIL'}")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--level", type=int, default=3)
    args = ap.parse_args()

    for a in (0.0, 0.25, 0.5, 0.75):
        show(f"thm1.2 ball3 p=1 f={a}*r2/2", S.check_theorem("thm1.2", "ball3", 1, f"{a}*r2/2", level=args.level))
    try:
        S.check_theorem("thm1.2", "ball3", 1, "3*r2/2", level=2)
    except S.HypothesisViolated as exc:
        print(f"thm1.2 ball3 p=1 f=3*r2/2: {exc}")
    show("thm1.3 ball3 p=1", S.check_theorem("thm1.3", "ball3", 1, "0", level=1))
    show("thm1.5 ball3 p=1 f=0", S.check_theorem("thm1.5", "ball3", 1, "0", level=2))
    for b in (0.0, 0.1, 0.2):
        show(f"thm1.6 ball3 p=1 f={b}*x1 k=5", S.check_theorem("thm1.6", "ball3", 1, f"{b}*x1", level=2, k=5))
    for name, f, ps, level in [("circle", "0", (1,), 256), ("circle", "0.2*x1", (1,), 256),
                               ("sphere", "0", (1,), 3), ("clifford", "0.2*x1", (1, 2), 12)]:
        emb = S.make_embedding(name, f)
        for p in ps:
            for j in (1, 2, 3):
                show(f"LP {name} f={f} p={p} j={j}", S.lp_check(emb, p, j, level, tol_rel=1e-3))


if __name__ == "__main__":
    main()
