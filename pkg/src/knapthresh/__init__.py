"""Random-threshold policies for online unit-density knapsack packing.

Simulators for single- and multi-knapsack threshold policies, the two
optimal threshold distributions with their solved constants, exact
offline optima, the adversarial distributions that show the guarantees
are tight, and a fulfillment-data experiment pipeline.
"""

from .core import (
    ACCEPTED,
    BLOCKED,
    REJECTED,
    GreedyClassification,
    ItemSequence,
    PackingOutcome,
    TwoBinsOutcome,
    classify_items,
    packed_value,
    simulate_fixed_threshold,
    simulate_greedy,
    simulate_two_bins,
)
from .thresholds import (
    SolvedConstants,
    ThresholdCdf,
    cdf_f1,
    cdf_f2,
    fixed_threshold_cdf,
    percentile_grid,
    quantile,
    sample,
    sample_many,
    solve_constants,
)
from .optimum import OptResult, SizeLimitError, opt_integer, opt_multi, opt_plus
from .evaluation import (
    BoundCertificate,
    CompetitiveReport,
    ExpectationReport,
    bound_certificate,
    competitive_report,
    expected_packed_exact,
    expected_packed_mc,
)
from .adversarial import (
    AdversarialDistribution,
    VerificationError,
    build_thm32,
    build_thm34,
    build_thm42,
    enumerate_thm42,
    verify_thm32,
    verify_thm34,
)
from .multiknapsack import (
    MultiInstance,
    MultiOutcome,
    expected_combined,
    guarantee_check,
    route_greedy,
    simulate_combined,
)
from .experiments import (
    ExperimentConfig,
    OrderDataset,
    emit_results,
    ingest_csv,
    percentile_thresholds,
    purse_dataset,
    run_experiment,
    synth_generate,
)

__version__ = "0.1.0"
