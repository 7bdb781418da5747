"""Numerical verification of volume flux and the Gamma map on flat surfaces."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConePointHit,
    ConfigParseError,
    ConfigValidationError,
    DegenerateCrossing,
    DegenerateLeg,
    DimensionMismatch,
    ExcessiveDegeneracy,
    PointOutsideAtlas,
    ProfileCountMismatch,
    SingularPairing,
    UnknownCurve,
    UnsupportedSurface,
    VolfluxError,
)
from .flux import FluxClass, flux_loop_demo, flux_of_word, flux_oracle  # noqa: E402
from .gamma import (  # noqa: E402
    Budget,
    GammaEstimate,
    build_loop,
    gamma_closed_form,
    gamma_mc,
    gamma_stratified,
    injectivity_witness,
    verify_theorem2,
)
from .homology import (  # noqa: E402
    BasisCurve,
    CohomologyClass,
    CurveSystem,
    HomologyVector,
    eval_phi,
    loop_class,
    poincare_dual,
    signed_crossings,
    standard_curves,
)
from .isotopy import (  # noqa: E402
    Cylinder,
    Letter,
    TwistProfile,
    TwistWord,
    apply_point,
    check_volume_preservation,
    int_omega,
    standard_cylinders,
    trajectory,
)
from .kernel import PathSystem  # noqa: E402
from .surface import (  # noqa: E402
    FlatSurface,
    SurfacePoint,
    build_genus2_l,
    build_torus,
    normalize,
    sample_area,
    unroll_segment,
)
