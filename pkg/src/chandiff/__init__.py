"""Diffusion-based denoising of simulated wireless channels.

The library simulates AWGN and Rayleigh baseband links with per-symbol MMSE
equalization, trains a small noise-prediction network whose corruption
schedule is matched to the post-equalization noise distribution, runs the
deterministic multi-step reverse sampler to strip channel noise, and checks
the entropy-reduction condition of that sampler by Monte Carlo.
"""

from .channel import (
    AWGN,
    ChannelRealization,
    perturb_estimate,
    sample_rayleigh_channel,
    sigma_to_snr_db,
    snr_db_to_sigma,
    transmit,
)
from .denoiser import (
    Batch,
    DenoiserParameters,
    NetworkSpec,
    grad_loss,
    init_params,
    noise_prediction_loss,
    predict_epsilon,
    timestep_embedding,
)
from .entropy import (
    MonteCarloReport,
    build_report,
    conditional_entropy_step,
    f_tau,
    mc_moments,
    recommend_tmax,
    u_tau,
)
from .equalizer import (
    EqualizedObservation,
    conditional_moments,
    equalize_mmse,
    mmse_weights,
    normalize_reshape,
    receive,
)
from .optim import LearningRateSchedule, optimizer_step
from .rng import split, stream
from .sampler import estimate_x0, sample, sample_from_state, sample_step
from .schedule import (
    DiffusionSchedule,
    build_schedule,
    default_schedule,
    forward_diffuse,
    select_m,
    step_coefficients,
)
from .signals import (
    ComplexSymbolBlock,
    RealSignalBlock,
    normalize_power,
    normalize_real,
    pack_complex,
    unpack_real,
)
from .sources import make_source, sample_source, write_corpus
from .training import draw_training_batch, train

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
