"""Batch evaluation toolkit for paired DCE-MRI image synthesis."""

__version__ = "0.1.0"

from .images import (  # noqa: F401
    BoundingBox, Image2D, Phase, Volume, extract_slices, normalize_volume,
    resize_to_unit_aspect, stack_volume, subtraction_image,
)
from .pair_metrics import (  # noqa: F401
    DatasetMetricsSummary, PairMetricsRecord, compute_pair_record, dice, mae,
    mse, ms_ssim, psnr, ssim, summarize_pairs,
)
from .frechet import (  # noqa: F401
    FeatureSet, GaussianFit, baseline_extract, fit_gaussian,
    frechet_between_sets, frechet_distance, read_featureset, write_featureset,
)
from .same import (  # noqa: F401
    CheckpointRecord, Direction, SAMeTable, scale_cohort, select_checkpoint,
)
from .kinetics import (  # noqa: F401
    KineticsAggregate, KineticsSeries, Source, aggregate_kinetics,
    case_kinetics, ordering_fraction, source_offset,
)
from .phantom import PhantomSpec, generate_phantom  # noqa: F401
