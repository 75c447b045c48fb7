"""Classical emulation of Hamiltonian embeddings for linear PDEs and ODEs.

The core trick is the warped phase transformation: multiplying the state by
exp(-p) in an auxiliary variable turns dissipation into unitary transport,
so general linear dynamics become Hermitian and can be driven by the same
machinery as a Schrodinger equation.  The package also provides the
parity-dilating unitarisation alternative and leading-order gate-count
estimators for both routes.
"""

from .grids import (
    Dense,
    Diagonal,
    Grid,
    Identity,
    KronOperator,
    Momentum,
    MomentumSquared,
    PGrid,
    SpectralOps,
    diag_from_function,
    dft_matrix,
    fourier_matrix,
    from_modes,
    kron_apply,
    momentum_operator,
    to_modes,
)
from .warp import (
    IntegrateP,
    PointP,
    WarpedState,
    analytic_mode_solution,
    containment_ratio,
    dominant_speed,
    estimate_domain,
    extend_initial,
    recover,
)
from .ode import (
    HermitianSplit,
    LinearSystem,
    SchrodingerisedSystem,
    StabilityWarning,
    assemble_schrodingerised,
    augment_inhomogeneous,
    default_pgrid,
    hermitian_split,
)
from .evolvers import (
    CFLError,
    EvolutionPlan,
    FDTransport,
    Trajectory,
    dense_expm_oracle,
    evolve_exact_diagonal,
    evolve_mode_blocks,
    evolve_trotter,
    evolve_upwind_fd,
)
from .dilation import (
    DilationLadder,
    DilationStep,
    build_dilation_step,
    evolutionary_step,
    ladder_evolve,
    postselect,
)
from .models import (
    BlackScholesModel,
    BoltzmannModel,
    ConvectionModel,
    FokkerPlanckModel,
    HeatModel,
    LiouvilleModel,
    QuadratureRule,
    build_black_scholes,
    build_boltzmann,
    build_convection,
    build_fokker_planck,
    build_heat,
    build_liouville,
    default_ordinates,
    exact_convection_solution,
    exact_heat_solution,
)
from .resources import CostQuery, EstimateResult, estimate, schr_vs_unitary_ratio

__version__ = "0.1.0"
