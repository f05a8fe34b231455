"""
Cell-averaged ergodic sum rate with random user drops
======================================================

Users are dropped uniformly in the cell; for each drop the selectors pick a
mode and we average its ergodic sum rate over drops. This runs at desk
scale (200 drops for N=K=2, fewer for larger systems); the full-scale
setting is 4000 drops with 5000 fading realizations.

Equivalent command line::

    dasrate cell-average --desk-scale --fixed-mode '[1,2]' --fixed-mode '[1,1]'
"""

from dasrate import DropExperimentConfig, cell_average_experiment
from dasrate import montecarlo as mc

SNR = tuple(float(s) for s in range(0, 55, 10))

for n, drops, fixed in [(2, 200, ((1, 2), (1, 1))), (3, 60, ((1, 2, 3), (1, 1, 1))),
                        (4, 20, ((1, 2, 3, 4), (1, 1, 1, 1)))]:
    cfg = DropExperimentConfig(n, n, SNR, drops=drops, realizations=250, seed=0,
                               selectors=(mc.PROPOSED, mc.IDEAL_CLOSED), fixed_modes=fixed)
    rows = cell_average_experiment(cfg, workers=4)
    print(f"\nN = K = {n}, {drops} drops")
    print(f"{'SNR':>5} " + " ".join(f"{lab:>24}" for lab in cfg.labels))
    for snr in SNR:
        vals = [r.mean_sum_rate for r in rows if r.snr_db == snr]
        print(f"{snr:5.0f} " + " ".join(f"{v:24.3f}" for v in vals))

##############################################################################
# The proposed selector tracks the exhaustive one almost exactly while
# evaluating far fewer modes; the multi-user fixed modes flatten at high SNR
# where interference dominates, while full single-user transmission keeps
# growing.
