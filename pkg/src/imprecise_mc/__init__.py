"""Monte Carlo lower envelopes of expectations over parametrised families of distributions."""

__version__ = "0.1.0"

from .distributions import (  # noqa: E402
    BinaryDensityFamily,
    BinaryDensitySpec,
    CdfDistribution,
    Distribution,
    Family,
    Normal,
    ParamBox,
    PiecewiseConstant,
    Uniform,
    find_vanishing_bits,
    make_binary_density,
    normal_family,
)
from .estimator import (  # noqa: E402
    EnvelopeEstimate,
    SolverConfig,
    lower_envelope_estimate,
    naive_lower_envelope,
    upper_envelope_estimate,
)
from .sampling import SampleStream, derive_seed, draw_uniform_stream  # noqa: E402
