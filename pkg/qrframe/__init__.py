name = 'qrframe'
version = '0.1.0'

from .state import (
    MassConfig, # particle masses and hbar, particle 0 is the reference
    CoordinateFrame, # labelled position/momentum coordinates
    GaussianBranch, # one weighted gaussian branch
    GaussianSuperposition, # closed-form backend state
    GridAxis, # periodic axis of a grid
    GridState, # sampled backend state
    product_state, superposition, two_branch_state, rasterize,
)

from .transforms import (
    LinearCanonicalTransform, # x' = A x, p' = A^-T p
    build_transform, # catalog lookup by name
    to_frame, # move a state to a registered frame
)

from .reduction import (
    DensityMatrix, # rho on the retained grid
    reduce_relative, # trace out the center of mass
    reduce_external, # trace out the other particles
    twirl, # average over cm translations
)

from .modeling_qrf import (
    RelativeHamiltonian, # particle 0 as the frame
    ClassicalFrameHamiltonian, # prescribed classical frame trajectory
    AbsoluteHamiltonian, # external frame
)

from .trainer import Evolver, RunConfig
from .evaluator import EhrenfestEvaluator, run_selftest
from .scenarios import ScenarioConfig, run_scenario
