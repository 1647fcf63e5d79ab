"""Quaternionic functional calculi on the S-spectrum for commuting tuples."""

from . import quaternion
from .quaternion import (
    E1,
    E2,
    E3,
    ONE,
    SliceCoords,
    embed_left,
    embed_right,
    qconj,
    qinv,
    qmul,
    qnorm,
    quaternion as quat,
    slice_decompose,
    slice_recompose,
)
from .linalg import (
    CommutingTuple,
    QOperator,
    SSpectrum,
    embed_real_matrix,
    embed_scalar,
    extract_components,
    make_tuple,
    op_add,
    op_compose,
    op_inverse,
    op_scale_left,
    op_scale_right,
    random_commuting_tuple,
    realify,
    s_spectrum,
)
from .functions import (
    ExpStem,
    PolyStem,
    RationalStem,
    SliceFunction,
    apply_diff,
    compose_phi_alpha_inv,
    constant,
    descriptor_to_function,
    evaluate,
    fmul,
    fueter_tf1,
    function_to_descriptor,
    kernel_DSL,
    kernel_DbarSL,
    kernel_DbarSR,
    kernel_FL,
    kernel_FR,
    kernel_SL,
    kernel_SR,
    monomial_times,
    poly,
    rational,
)
from .contours import Circle, IntegrationResult, SliceContour, enclose_spectrum, integrate
from .calculi import (
    CalculusResult,
    ResolventFactory,
    calculus_bounded,
    calculus_unbounded,
    phi_alpha_image,
    resolvent,
    s_right_variants,
    spectrum_of,
    transform_operator,
)

__version__ = "0.1.0"
