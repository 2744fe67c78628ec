# constants.py

#Part of the gamepl package

"""Numerical constants and observation-mask codes shared across gamepl."""

from numpy import sqrt, pi

eps_prob = 1E-7          # probability clamp before every logarithm
latent_halfwidth_cdf = 8.  # Gaussian-CDF latent clamp, in units of sigma around 0.5
latent_bound_sigmoid = 16.  # sigmoid latent clamp, symmetric around 0
sqrt_2pi = sqrt(2. * pi)
confidence_sharpness = 10.  # constant in the exponent of the scheduler weight

#  Observation mask codes (dataset files use '1', '0', '?')
OBSERVED_POSITIVE = 1
OBSERVED_NEGATIVE = 0
UNOBSERVED = -1
mask_symbols = {'1': OBSERVED_POSITIVE, '0': OBSERVED_NEGATIVE, '?': UNOBSERVED}

dataset_magic = '#gamepl-v1'
pseudo_magic = '#gamepl-pseudo-v1'
model_format = 'gamepl-model'
model_format_version = 1
