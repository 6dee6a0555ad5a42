"""
Spectral measures and the boundedness equivalences
==================================================

A reversible kernel is self-adjoint on the stationary L2 space, so every
observable carries a spectral measure: atoms at the eigenvalues with masses
given by squared projections.  Whether the variance of partial sums grows
linearly, the autocovariance series converges, the 1/(1-t) integral is
finite, and the observable lies in the centered range of the square-root
operator are all the same question, and the answer is read off the mass at
eigenvalue 1.
"""

from revmax import (
    Observable,
    check_conditions,
    dl_integral,
    spectral_measure,
    two_state,
    variance_growth,
)

# the classic benchmark: symmetric two-state chain, antisymmetric observable
chain = two_state(0.25, 0.25)
f = Observable([1.0, -1.0])

sm = spectral_measure(chain, f)
print("spectral atoms (lambda, mass):", [(round(l, 6), round(m, 6)) for l, m in sm.atoms])
print("1/(1-t) integral:", dl_integral(sm))

report = check_conditions(chain, f)
print("asymptotic variance sigma^2:", report.c_sigma2)
for n in (4, 16, 64, 256):
    print(f"  E S_n^2 / n at n={n:4d}: {variance_growth(chain, f, n):.6f}")

print("five conditions agree:", report.all_equivalent, report.booleans())

# an uncentered observable puts mass at eigenvalue 1 and everything flips
g = Observable([1.0, 1.0])
bad = check_conditions(chain, g)
print("\nuncentered observable:", bad.booleans(), "agree:", bad.all_equivalent)
print("variance growth is linear: b_sup over the probe grid =", bad.b_sup)
