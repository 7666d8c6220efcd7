"""MIN-VAE speech modeling and variational-EM enhancement (C++ core bindings)."""

from ._core import (
    enhance,
    generate_toy_corpus,
    gradcheck,
    istft,
    kl_bernoulli,
    kl_gaussians,
    load_checkpoint,
    mix_at_snr,
    nmf_update,
    power,
    save_checkpoint,
    si_sdr,
    stft,
    train_toy_model,
    update_pi,
    update_responsibility,
    Model,
)

__all__ = [
    "Model",
    "enhance",
    "generate_toy_corpus",
    "gradcheck",
    "istft",
    "kl_bernoulli",
    "kl_gaussians",
    "load_checkpoint",
    "mix_at_snr",
    "nmf_update",
    "power",
    "save_checkpoint",
    "si_sdr",
    "stft",
    "train_toy_model",
    "update_pi",
    "update_responsibility",
]
