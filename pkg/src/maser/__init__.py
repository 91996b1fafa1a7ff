"""Fairness-aware MASLD risk prediction toolkit.

Pipeline stages: ingest EHR tables, build windowed cohorts, exact-match on
sex and age, SMOTE-Tomek resample, train LASSO logistic models with SHAP
feature reduction, evaluate overall and per subgroup, fit equal-opportunity /
equalized-odds threshold policies, and serve the published MASER model.
"""

__version__ = "0.1.0"

from .core_data import (
    AGE_BINS,
    SUBGROUPS,
    CodeList,
    FeatureSchema,
    FeatureVector,
    PatientRecord,
    assign_cohort,
    cap_value,
    derive_demographics,
    ingest_tables,
    validate_vectors,
)
from .cohort import (
    IndexEvent,
    MatchedCohort,
    SplitSpec,
    adjust_prevalence,
    exact_match,
    find_index_event,
    split_dataset,
    window_and_aggregate,
)
from .errors import ConfigError, InsufficientDataError, MaserError, ValidationError
from .fairness import (
    GroupThresholdPolicy,
    apply_policy,
    fairness_report,
    fit_equal_opportunity,
    fit_equalized_odds,
)
from .metrics import (
    ConfusionCounts,
    MetricsReport,
    auroc,
    prevalence_by_group,
    roc_curve,
    subgroup_metrics,
    summary_metrics,
)
from .model import (
    LassoLogisticModel,
    ShapExplanation,
    StandardScaler,
    fit_scaler,
    lambda_max,
    linear_shap,
    maser_model,
    predict_proba,
    rank_and_reduce,
    train_lasso_logistic,
)
from .resampling import ResampleParams, smote, smote_tomek, tomek_links
from .stats import (
    TestResult,
    bootstrap_diff,
    chi_square,
    mann_whitney_u,
    mcnemar,
    two_proportion_z,
)
from .synth import CohortSpec, generate_cohort, published_cohort_spec
