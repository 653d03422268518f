"""Invariant coefficients of the residue densities for m = 2..M and their interpolants in m.

    python3 scripts/reproduce_theorems.py --kind type1 --m-max 6
    python3 scripts/reproduce_theorems.py --kind type2 --m-max 5

Type I runs on fully symbolic jets.  Type II uses a random curvature jet with
symbolic X (the coefficients do not depend on the curvature values), which keeps
m = 5 and 6 within a few minutes.
"""
import argparse
import time

from wresidue.actions import InterpolationResidual, decompose, interpolate_coefficients, invariant_basis, pipeline
from wresidue.jets import JetContext, random_context


def context(kind, m, seed):
    if kind == "type2":
        return random_context(m, seed=seed, x=False)
    return JetContext(m)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--kind", choices=["unperturbed", "type1", "type2"], default="type1")
    ap.add_argument("--m-min", type=int, default=2)
    ap.add_argument("--m-max", type=int, default=6)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()

    table = {}
    for m in range(args.m_min, args.m_max + 1):
        t0 = time.perf_counter()
        ctx = context(args.kind, m, args.seed)
        coeffs, rest = decompose(pipeline(args.kind, ctx).density, invariant_basis(ctx, args.kind))
        if not rest.is_zero():
            raise SystemExit(f"m={m}: density is not spanned by the invariant basis")
        table[m] = coeffs
        row = "  ".join(f"{k}={v}" for k, v in coeffs.items())
        print(f"m={m}  {row}  ({time.perf_counter() - t0:.1f} s)", flush=True)

    # strip the alternating sign so that the interpolants are polynomials
    sign = (lambda m: (-1) ** m) if args.kind == "type2" else (lambda m: 1)
    print()
    for name in next(iter(table.values())):
        values = {m: c[name] * sign(m) for m, c in table.items()}
        try:
            poly = interpolate_coefficients(values)
            label = "(-1)^m * " if args.kind == "type2" else ""
            print(f"{name}: {label}({poly.as_expr().factor()})")
        except InterpolationResidual as exc:
            print(f"{name}: {exc}")


if __name__ == "__main__":
    main()
