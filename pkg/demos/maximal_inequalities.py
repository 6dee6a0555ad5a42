"""
Maximal inequalities with committed constants
=============================================

Each inequality bounds the expected running maximum of partial sums by
simpler per-term quantities.  Both sides are computed exactly by enumeration
and compared against a constant traced through the derivation before any
instance was generated, so a violation is always meaningful.
"""

from revmax import InequalityId, WeightSequence, traced_constant, verify_batch

weights = WeightSequence.power(-0.5)

print("constants and their derivations")
print("-" * 60)
for check, p in [
    (InequalityId.MAX_VS_ENDPOINT, 2.0),
    (InequalityId.MAX_VS_PROJECTIONS, 2.0),
    (InequalityId.DYADIC_WEIGHTED_MAX, 2.0),
    (InequalityId.SECOND_MOMENT_SERIES, 2.0),
]:
    tc = traced_constant(check, p)
    print(f"{check.value} at p={p:g}: constant {tc.value:g}")
    for step in tc.derivation:
        print(f"    {step}")

print()
print("worst observed ratio over 100 random instances per inequality")
print("-" * 60)
for check in InequalityId:
    for p in (1.5, 2.0, 3.0):
        try:
            constant = traced_constant(check, p).value
        except ValueError:
            continue
        records = verify_batch(check, p=p, count=100, seed=42, weights=weights)
        ratios = [r.ratio for r in records if not r.skipped]
        worst = max(ratios) if ratios else float("nan")
        flag = "ok" if all(r.passed for r in records) else "VIOLATED"
        print(
            f"{check.value:32s} p={p:g}  worst lhs/rhs = {worst:8.3f} "
            f"(allowed {constant:g})  {flag}"
        )
