"""
Trend evidence for almost-sure convergence
==========================================

No finite run certifies almost-sure convergence, but the Cauchy property
leaves a falsifiable fingerprint: oscillations of the weighted series over
dyadic windows [n, 2n] should shrink trial after trial.  A spectrally gapped
chain with decaying weights shows the shrinking trend; flat weights on an
observable with unit-eigenvalue mass break it.
"""

import numpy as np

from revmax import (
    Observable,
    WeightSequence,
    as_convergence_diagnostic,
    birth_death,
    derive_trial_seed,
    sample_trajectories,
    series_paths,
)

chain = birth_death([0.3] * 9, [0.3] * 9)
f = Observable(np.arange(10.0)).centered(chain)

trials, horizon = 200, 4096
seeds = [derive_trial_seed(2024, i) for i in range(trials)]
states = sample_trajectories(chain, horizon, seeds)
checkpoints = [2**k for k in range(3, 12)]


def show(table, label):
    print(label)
    print("  checkpoint   median osc     95% osc")
    for c, med, q in zip(table.checkpoints, table.median, table.q95):
        print(f"  {c:10d}   {med:10.3e}   {q:9.3e}")
    print("  trend consistent with a.s. convergence:", table.consistent)
    print()


paths = series_paths(chain, f, WeightSequence.power(-0.5), states)
show(as_convergence_diagnostic(paths, checkpoints), "decaying weights, centered observable")

control = series_paths(chain, Observable(np.arange(10.0)), WeightSequence.constant(1.0), states)
show(as_convergence_diagnostic(control, checkpoints), "flat weights, unit-eigenvalue mass (control)")
