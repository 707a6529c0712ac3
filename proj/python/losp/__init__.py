"""Multi-shot DWI reconstruction with locally low-rank Hankel priors."""

from ._losp import (
    ConfigError,
    HankelSpec,
    Instance,
    NumericalError,
    Phantom,
    RunConfig,
    adc_fit,
    adjoint,
    energy_rank,
    fft2c,
    generate_phantom,
    hsvd_recover,
    ifft2c,
    lift,
    load_config,
    make_instance,
    optimal_rank,
    reconstruct,
    set_thread_count,
    shot_combine,
    truncate_svd,
    zero_filled_psnr,
)

__all__ = [
    "ConfigError",
    "HankelSpec",
    "Instance",
    "NumericalError",
    "Phantom",
    "RunConfig",
    "adc_fit",
    "adjoint",
    "energy_rank",
    "fft2c",
    "generate_phantom",
    "hsvd_recover",
    "ifft2c",
    "lift",
    "load_config",
    "make_instance",
    "optimal_rank",
    "reconstruct",
    "set_thread_count",
    "shot_combine",
    "truncate_svd",
    "zero_filled_psnr",
]
