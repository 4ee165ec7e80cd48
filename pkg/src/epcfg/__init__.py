"""Energy-preserving classifier-free guidance with a toy diffusion test bed."""

from .diffusion import (
    DiffusionSchedule,
    MixtureModel,
    TrajectoryLog,
    analytic_x0,
    ddim_step,
    eps_from_x0,
    responsibilities,
    sample_batch,
    sample_trajectory,
    vp_schedule,
)
from .estimators import GuidanceTransformer, GuidedSampler, stack_pairs
from .exceptions import *  # noqa: F401,F403
from .guidance import (
    EPS_ZERO,
    EnergyReport,
    GuidanceParams,
    Mode,
    cfg_combine,
    ep_cfg,
    ep_rescale,
    std_rescale_baseline,
)
from .io import read_latent, write_latent
from .latent import (
    DEFAULT_WINDOW,
    FULL_WINDOW,
    RobustEnergyResult,
    RobustWindow,
    energy,
    make_latent,
    percentile,
    robust_energy,
)
from .metrics import TraceSummary, energy_distance, moment_stats, trace_summary

__version__ = "0.1.0"
