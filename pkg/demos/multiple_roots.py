"""Signatures at a characteristic value where several curves vanish to high order.

``Q(lam)^* diag(d_i) Q(lam)`` keeps the vanishing orders and signs of the
diagonal entries at ``lam0``, so the expected signature is known in
advance.  The forms of the kernel recursion reproduce the Taylor
coefficients of the curves, computed here by finite differences.

Run with ``python3 demos/multiple_roots.py``.
"""

import math

import numpy as np

from krein_pencil import (GridSpec, branch_derivatives, find_characteristic_values,
                          graphical_krein, kernel_recursion, krein_signature_of_cv,
                          track_branches)
from krein_pencil.generators import congruent_pencil

# d_1 = -(lam - s)^3, d_2 = 3 (lam - s)^3, d_3 = 2 at s = 0.37
polys = [[0, 0, 0, -1], [0, 0, 0, 3], [2]]
P = congruent_pencil(polys, np.random.default_rng(1), shift=0.37)

fam = track_branches(P, GridSpec(-1.0, 1.0, 201))
cv = min(find_characteristic_values(P, fam), key=lambda c: abs(c.lambda0 - 0.37))
state = kernel_recursion(P, cv, family=fam)
d = branch_derivatives(P, fam, cv, max_order=len(state.Kcounts) + 1)

print(f"characteristic value {cv.lambda0!r}, kernel dimension {cv.geo_mult}")
print(f"algebraic multiplicity {state.alg_mult}")
for m, counts in enumerate(state.Kcounts, start=1):
    print(f"  order {m}: (positive, negative, zero) = {counts}")
print()
for i in range(cv.geo_mult):
    m = d.vanishing_order(i)
    eta = int(np.sign(d.mu[i, m]))
    print(f"curve {i}: order {m}, mu^({m}) = {d.mu[i, m]:.8f} +- {d.mu_err[i, m]:.1e}, "
          f"graphical indices {graphical_krein(m, eta)}")
for m in range(1, len(state.Kcounts) + 1):
    w = state.form_eigenvalues(m)
    w = w[np.abs(w) > 1e-8 * (1 + P.scale) * math.factorial(m)]
    if w.size:
        print(f"order-{m} form eigenvalues times {m}!: {np.round(w, 8)}")
print()
kp, km, kappa = krein_signature_of_cv(state)
print(f"recursion: kappa+ = {kp}, kappa- = {km}, kappa = {kappa}")
