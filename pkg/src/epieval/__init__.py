"""Evaluate and rank epidemic forecasts by epidemiologically relevant features."""
from .curves import (
    AlignedPair,
    DistKind,
    DistSpec,
    EpiCurve,
    ForecastRun,
    ForecastSet,
    Mode,
    ReplicateMatrix,
    Replicates,
    StochasticSeries,
    align,
    composite_curve,
    validate_curve,
)
from .exceptions import *  # noqa: F401,F403
from .features import (
    FEATURE_IDS,
    FeatureConfig,
    FeatureVector,
    age_attack_rate,
    extract_all,
    first_take_off,
    flu_percentage,
    intensity_duration,
    non_influenza_weeks,
    peak,
    season_baseline,
    season_start,
    secondary_attack_rate,
    speed_of_epidemic,
    total_attack_rate,
)
from .harness import PerturbConfig, SynthConfig, generate_curve, generate_forecast_family, graded_methods
from .io import RunConfig, ingest_forecasts, ingest_observed, load_config
from .measures import (
    CORRECTED,
    DEFAULT_MEASURES,
    STRICT,
    MeasureId,
    aggregate_feature_errors,
    ape,
    compute_measure,
    feature_error_series,
    one_step_ahead_curve,
    sape,
)
from .pipeline import ReportBundle, evaluate_region, run_pipeline, write_csv, write_json
from .plots import emit_plots
from .ranking import (
    ErrorMatrix,
    RankMatrix,
    box_stats,
    cluster_by_mape,
    consensus_over_features,
    consensus_over_measures,
    consensus_over_regions,
    horizon_ranking,
    rank_column,
    rank_matrix,
)
from .stochastic import (
    CLOSED_FORM,
    Distance,
    Sampled,
    bhattacharyya_normal,
    cumulative_relative,
    hellinger_normal,
    measures_between_pdfs,
    measures_vs_point,
    pdf_distance,
    replicate_measure,
    sample_pdf,
)

__version__ = "0.1.0"
