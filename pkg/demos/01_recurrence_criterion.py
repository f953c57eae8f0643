"""
Recurrence criterion and its constants
======================================

A two-regime switching diffusion alternates between an inward regime 0
(x.b_0(x) <= -r_- far out) and an outward regime 1 (x.b_1(x) <= r_+).
It is positive recurrent when the time spent in regime 0 beats the
escape in regime 1:

    inf lambda_1 (2 r_- - d)  >  sup lambda_0 (2 r_+ + d).

This script evaluates the criterion for the reference model, prints the
constants (eps, q, c) behind the explicit bound E tau <= |x|^2 / c and
then scans the regime-0 exit rate to locate the critical value.
"""

import numpy as np

from switchdiff import build_model, check_recurrence_criterion

MODEL = {
    "dim": 1,
    "drift_0": {"family": "InverseRadial", "rho": 2, "sign": -1, "cap": 1},
    "drift_1": {"family": "InverseRadial", "rho": 1, "sign": 1, "cap": 1},
    "intensity_0": {"family": "Constant", "lambda": 0.5},
    "intensity_1": {"family": "Constant", "lambda": 2},
}

model = build_model(MODEL)
rep = check_recurrence_criterion(model)
b = model.bounds
print(f"r_- = {b.r_minus}, r_+ = {b.r_plus}, M = {b.M}")
print(f"A = {rep.A}  B = {rep.B}  -> {rep.reason}")
print(f"eps = {rep.eps:.4g}, q = {rep.q:.6f}, c = {rep.c}")
print(f"C_z0 = {rep.C_z0:.5f}, C_z1 = {rep.C_z1:.5f}")
print(f"balance residual = {rep.balance_residual():.1e}")

# bound on E tau from x0 = 10 in each starting regime
for z0 in (0, 1):
    print(f"bound on E tau from (10, {z0}): {rep.theory_bound([10.0], z0):.2f}")

# %%
# The criterion fails once sup lambda_0 reaches A / (2 r_+ + d) = 6 / 3 = 2.
print("\nlambda_0   A     B     recurrent   c")
for lam0 in np.linspace(0.25, 2.5, 10):
    m = build_model(dict(MODEL, intensity_0={"family": "Constant", "lambda": float(lam0)}))
    r = check_recurrence_criterion(m)
    c = f"{r.c:.4f}" if r.recurrent else "-"
    print(f"{lam0:8.2f}  {r.A:4.1f}  {r.B:4.1f}   {str(r.recurrent):9s}  {c}")
