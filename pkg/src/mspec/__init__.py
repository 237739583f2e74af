"""Digital harmonic analysis of arithmetic functions on products of
roots of unity."""

__version__ = "0.1.0"

from .errors import ArgumentError, MspecError, ResourceError
from .arith import (
    ArithmeticTable,
    dump_table,
    load_table,
    nu_p_weight,
    primes_up_to,
    sieve,
)
from .group import (
    CharacterIndex,
    GroupShape,
    char_eval,
    char_stats,
    char_values,
    decode,
    encode,
    make_group_shape,
    parse_shape,
)
from .spectral import (
    KataiWitness,
    Spectrum,
    ap_l1_sum,
    char_dft_closed_form,
    char_l1_norm,
    correlation,
    gq,
    group_spectrum,
    interval_l1_sum,
    inverse_transform,
    katai_witness,
    linf_bound_check,
    p_power_rational_check,
    truncated_character,
)
from .alignment import (
    AlignmentResult,
    SubgroupSpec,
    alignment_full_group,
    alignment_gram_oracle,
    alignment_semidirect,
    alignment_subgroup,
    learning_bounds,
)
from .primes import (
    LinearDigitMap,
    SingularSeries,
    count_primes_digit_condition,
    lambda_balanced_correlation,
    make_linear_map,
    singular_series,
)
from .learning import (
    CsqTranscript,
    FixedFeatureStrategy,
    MlpModel,
    NgdConfig,
    binary_mult_covariance,
    csq_adversarial_game,
    csq_bad_event_rate,
    gradient_check,
    ngd_experiment,
    ngd_train,
    rotate_first_layer,
    sample_binary_multiplicative,
)
