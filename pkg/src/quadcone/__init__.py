"""quadcone: 3-D collision cones and avoidance guidance for quadric bodies."""

__version__ = "0.1.0"

from .cone import (  # noqa: F401
    Cone3D,
    PlanarCone,
    cone_3d,
    cross_section_area,
    planar_cone_angles,
    project_states,
    y_components,
)
from .guidance import (  # noqa: F401
    ActivationGate,
    GuidanceConfig,
    GuidanceTerms,
    PlaneRule,
    RateTracker,
    coop_accels,
    noncoop_accel,
    numeric_rates,
    select_plane,
)
from .kinematics import (  # noqa: F401
    ControlInput,
    EngagementState,
    StateRates,
    accel_direction_3d,
    accel_vector,
    advance_turning,
    integrate_step,
    state_derivatives,
)
from .planes import (  # noqa: F401
    ConicClass,
    PlaneFrame,
    build_plane_frames,
    classify_conic,
    dual_conic,
    section_conic,
)
from .shapes import (  # noqa: F401
    CompositeKind,
    CompositeShape,
    Membership,
    QuadricClass,
    QuadricMatrix,
    build_quadric,
    carve_oriented_delimiter,
    classify_quadric,
    composite,
    composite_membership,
    evaluate,
    quadric_center,
    surface_samples,
)
from .sim import (  # noqa: F401
    AccuracyRow,
    AccuracyTable,
    BodySpec,
    MorphSpec,
    RunResult,
    Scenario,
    ShapeSpec,
    Telemetry,
    load_scenario,
    monte_carlo_accuracy,
    run_scenario,
    write_summary_json,
    write_telemetry_csv,
)
from .tangents import (  # noqa: F401
    TangentPair,
    corner_points,
    inner_common_tangents,
    point_tangents_to_ellipse,
    tangents_ellipse_vs_clipped,
    tangents_ellipse_vs_pointcloud,
)
