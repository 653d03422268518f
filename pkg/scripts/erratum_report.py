"""Type II density: engine coefficients against the printed closed form, plus the scalar reduction check.

    python3 scripts/erratum_report.py --m-list 2,3,4
"""
import argparse
from fractions import Fraction

from wresidue import targets
from wresidue.actions import compare_with_paper, decompose, invariant_basis, pipeline
from wresidue.jets import JetContext, random_context


def scalar_reduction(m, seed):
    # X = phi e_1 on flat space should give type II = (-1)^(m-1) type I
    base = random_context(m, seed=seed)
    d1 = pipeline("type1", JetContext(m, {}, base.f_jets, None)).density
    d2 = pipeline("type2", JetContext(m, {}, None, {(1, k): v for k, v in base.f_jets.items()})).density
    printed = targets.cxd2cx_density(JetContext(m, {}, None, {(1, k): v for k, v in base.f_jets.items()}))
    sign = Fraction((-1) ** (m - 1))
    return d2 == d1.scale(sign), printed == d1.scale(sign)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--m-list", default="2,3,4")
    ap.add_argument("--seed", type=int, default=3)
    args = ap.parse_args()

    for m in (int(t) for t in args.m_list.split(",")):
        ctx = random_context(m, seed=args.seed, x=False)
        basis = invariant_basis(ctx, "type2")
        engine, _ = decompose(pipeline("type2", ctx).density, basis)
        printed, _ = decompose(targets.cxd2cx_density(ctx), basis)
        report = compare_with_paper(ctx, "cxd2cx_density")
        print(f"m={m}: {report.status}, oracle {report.oracle_status}")
        for name in basis:
            flag = "" if engine[name] == printed[name] else "   <-- differs"
            print(f"  {name:14s} engine {str(engine[name]):>8s}   printed {str(printed[name]):>8s}{flag}")
        if m >= 3:
            ok_engine, ok_printed = scalar_reduction(m, args.seed)
            print(f"  scalar reduction X = phi e_1: engine {ok_engine}, printed {ok_printed}")


if __name__ == "__main__":
    main()
