"""Unstable eigenvalue counts of linearized Hamiltonian systems ``J L``.

Run with ``python3 demos/hamiltonian_counts.py``.
"""

import numpy as np

from krein_pencil import HamiltonianProblem, jl_spectrum, theorem1_check, theorem2_bound
from krein_pencil.generators import random_canonical

J2 = np.array([[0.0, -1.0], [1.0, 0.0]])
cases = {
    "saddle, L = diag(-1, 1)": HamiltonianProblem(J2, np.diag([-1.0, 1.0])),
    "centre, L = I": HamiltonianProblem(J2, np.eye(2)),
    "centre, L = -I": HamiltonianProblem(J2, -np.eye(2)),
    "canonical, L+ = diag(1, 2), L- = diag(-1, 3)":
        HamiltonianProblem.canonical(np.diag([1.0, 2.0]), np.diag([-1.0, 3.0])),
}
for name, H in cases.items():
    s = jl_spectrum(H)
    t = theorem1_check(H, s)
    print(f"{name}")
    print(f"  k_r = {s.k_r}, k_c = {s.k_c}, k_i^- = {s.k_i_minus}, n(L) = {t.n_L}, "
          f"n(D) = {t.n_D}, residual = {t.residual}")

print()
rng = np.random.default_rng(8)
H = random_canonical(6, rng=rng, inertia_plus=(4, 2, 0), inertia_minus=(5, 1, 0))
s = jl_spectrum(H)
b = theorem2_bound(H, s)
print(f"random canonical problem of size 12: k_r = {b.k_r}, lower bound {b.lower_bound}, "
      f"bound holds: {b.holds}")
