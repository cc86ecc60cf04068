"""Privacy-preserving multi-owner classification pipeline.

Data owners partition tabular data into sensitive and non-sensitive parts,
perturb the sensitive part with Laplace noise, and upload only the sanitized
result; a simulated cloud provider pools the uploads, trains one of five
classifiers, and serves label queries. The bench harness reproduces the
experiment grid (datasets x classifiers x noise placements x seeds) with
accuracy/precision/recall/F1 reporting and Wilcoxon significance tests.
"""

from .bench import BenchReport, RunConfig, run_bench, run_simulation
from .classifiers import (
    ClassifierConfig,
    TrainedModel,
    load_model,
    predict,
    save_model,
    train_model,
)
from .dataset import AttributeSchema, Dataset, SplitIndices, load_csv, split
from .errors import PpmdError
from .evaluation import (
    MetricsReport,
    WilcoxonResult,
    confusion,
    metrics,
    wilcoxon_signed_rank,
)
from .partition import (
    PartitionSpec,
    PartitionedDataset,
    partition,
    partition_columns,
    partition_rows,
    recombine,
)
from .privacy import (
    NoiseConfig,
    NoiseRecord,
    SanitizedDataset,
    inject_noise,
    laplace_density,
    sample_laplace,
    sanitize,
    sanitize_partition,
)
from .protocol import (
    CspState,
    Message,
    OwnerState,
    TraceLog,
    owner_query,
    run_protocol,
    scan_trace,
)

__version__ = "0.1.0"

__all__ = [
    "AttributeSchema", "Dataset", "SplitIndices", "load_csv", "split",
    "PartitionSpec", "PartitionedDataset", "partition", "partition_columns",
    "partition_rows", "recombine",
    "NoiseConfig", "NoiseRecord", "SanitizedDataset", "laplace_density",
    "sample_laplace", "inject_noise", "sanitize", "sanitize_partition",
    "ClassifierConfig", "TrainedModel", "train_model", "predict",
    "save_model", "load_model",
    "MetricsReport", "WilcoxonResult", "confusion", "metrics",
    "wilcoxon_signed_rank",
    "Message", "OwnerState", "CspState", "TraceLog", "run_protocol",
    "owner_query", "scan_trace",
    "RunConfig", "BenchReport", "run_bench", "run_simulation",
    "PpmdError",
]
