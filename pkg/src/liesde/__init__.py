"""Structure-preserving stochastic dynamics on reductive matrix Lie groups.

The public names are re-exported from the submodules:

* :mod:`liesde.algebra`: so(n), su(n), R^n; brackets, metrics, bases, curvature
* :mod:`liesde.group`: exponentials, Haar sampling, Riemannian Brownian motion
* :mod:`liesde.mechanics`: potentials, observables, Poisson bracket, Lie-Poisson steps
* :mod:`liesde.langevin`: momentum / position / symplectic Langevin integrators
* :mod:`liesde.diagnostics`: Gibbs oracle, ergodic averages, generator test, ESS
"""

__version__ = "0.1.0"

from liesde.algebra import (  # noqa: E402
    FROBENIUS,
    AlgebraDescriptor,
    AlgebraElement,
    BiInvariantMetric,
    OrthonormalBasis,
    StructureConstants,
    ad_matrix,
    bracket,
    build_basis,
    curvature_tensor,
    killing_form,
    pairing,
    project_to_algebra,
    ricci,
    sample_algebra_gaussian,
    sectional_curvature,
    structure_constants,
)
from liesde.group import (  # noqa: E402
    GroupElement,
    compose,
    exp_algebra,
    geodesic,
    group_defect,
    haar_sample,
    identity,
    inverse,
    rbm_path,
    rbm_step,
    reproject,
)
from liesde.langevin import (  # noqa: E402
    LangevinConfig,
    TrajectoryRecord,
    Variant,
    momentum_langevin_step,
    position_langevin_step,
    simulate,
    simulate_ensemble,
    symplectic_langevin_step,
)
from liesde.mechanics import (  # noqa: E402
    Hamiltonian,
    InertiaOperator,
    Observable,
    PhaseState,
    Potential,
    hamiltonian_drift,
    left_trivialized_gradient,
    lie_poisson_step,
    poisson_bracket,
    symplectic_drift_step,
    total_energy,
)
from liesde.rng import RngStream  # noqa: E402
