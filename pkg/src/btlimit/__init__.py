"""Prolate bases, BT-limited signals and minimum-norm extrapolation."""

__version__ = "0.1.0"

from .exceptions import BtlimitError, ConvergenceError, MismatchError, ResolutionError  # noqa: E402
from .numerics import QuadratureRule, SeededRng, gauss_legendre_rule, sym_eig  # noqa: E402
from .pswf import (  # noqa: E402
    BandParams,
    PswfBasis,
    build_basis,
    eval_phi,
    kernel_apply,
    line_gram,
    load_basis,
    save_basis,
)
from .btsignal import (  # noqa: E402
    BandlimitedSignal,
    BandSpec,
    KernelDensity,
    MultibandComponent,
    approximate_segment,
    membership_diagnostic,
    partial_sum_projection,
    random_bt_signal,
    spectral_support_check,
    synth_from_density,
    synth_multiband,
)
from .extrapolate import (  # noqa: E402
    MnsProblem,
    ObservationSet,
    epsilon_sweep,
    mns_extrapolate,
    tikhonov_extrapolate,
)
