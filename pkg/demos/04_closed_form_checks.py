"""
Checking the closed form against independent routes
====================================================

Three ways to get one user's ergodic rate:

* the exponential-integral closed form,
* quadrature of log2(1 + SINR) against the SINR density,
* a plain Monte Carlo average of log2(1 + SINR).
"""

import numpy as np
from scipy import integrate

from dasrate import (LinkBudget, ergodic_user_rate_closed, ergodic_user_rate_quadrature, exp_e1_scaled,
                     sinr_pdf)

serving = [0.064, 0.01]
interfering = [0.0031, 0.02]
budget = LinkBudget.from_snr_db(20.0)

total, _ = integrate.quad(lambda r: sinr_pdf(r, serving, interfering, budget), 0, np.inf, limit=500)
print(f"SINR density integrates to {total:.10f}")

closed = ergodic_user_rate_closed(serving, interfering, budget)
quad = ergodic_user_rate_quadrature(serving, interfering, budget)
rng = np.random.default_rng(0)
h = rng.standard_exponential((2_000_000, 4))
sinr = (h[:, :2] @ np.array(serving) * budget.power
        / (budget.noise_variance + h[:, 2:] @ np.array(interfering) * budget.power))
r = np.log2(1 + sinr)
print(f"closed form  {closed:.12f}")
print(f"quadrature   {quad:.12f}  (rel. diff {abs(quad / closed - 1):.1e})")
print(f"Monte Carlo  {r.mean():.12f}  +- {r.std() / np.sqrt(r.size):.1e}")

##############################################################################
# The scaled exponential integral stays finite where exp(x) and E1(x) alone
# would overflow and underflow.

for x in (1e-6, 1.0, 1e3, 1e6):
    print(f"exp(x)E1(x) at x={x:g}: {exp_e1_scaled(x):.15g}  (bracket {1 / (x + 1):.6g} .. {1 / x:.6g})")
