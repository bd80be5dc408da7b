"""
The free rigid body as a Lie-Poisson flow
=========================================

Body angular momentum lives in so(3). With inertia (1, 2, 3) on the basis
coefficients the flow is Euler's equations, and the integrator used here
moves m by conjugation, so the spectrum of m cannot change.
"""

import numpy as np

from liesde import AlgebraElement, Hamiltonian, InertiaOperator, Potential, build_basis
from liesde.diagnostics import spectrum_drift
from liesde.mechanics import lie_poisson_path

basis = build_basis("so3")
H = Hamiltonian(Potential.zero(basis.descriptor), InertiaOperator((1.0, 2.0, 3.0)))

# start near the middle axis, which is unstable: the body tumbles
m0 = AlgebraElement(basis.combine([0.05, 1.0, 0.05]), basis.descriptor)
ms = lie_poisson_path(H, m0, h=1e-3, n_steps=50_000, basis=basis, record_every=500)

coeffs = basis.coefficients(ms)
print("t      m_1      m_2      m_3")
for k in range(0, len(ms), 10):
    print(f"{k * 0.5:5.1f}  " + "  ".join(f"{c:+.4f}" for c in coeffs[k]))

# %%
# The middle coefficient swings from +1 to -1 in one tumble. Two quantities still stay put:
# the Casimir Q(m, m) and the eigenvalues of m.

cas = basis.pair(ms, ms)
print(f"\nCasimir drift        {np.abs(cas - cas[0]).max():.2e}")
print(f"spectrum drift       {spectrum_drift(ms).max():.2e}")
E = 0.5 * basis.pair(ms, H.velocity(ms, basis))
print(f"relative energy drift {np.abs(E - E[0]).max() / E[0]:.2e}")
