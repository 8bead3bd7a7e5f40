"""specgap: spectral gap induction certificates for matrix group reductions.

The package measures random-walk spectral gaps of finite matrix groups and
assembles the set-level and Lie-algebra-level certificates that transfer a
subgroup's gap to the ambient group: conjugated-copy covers, congruence-layer
lattices and their adjoint saturation, grade generation in two independent
forms, and the combined walk on the conjugated union of generators.
"""

from .charts import ChartConfig, LieVector, chart_floor, grade_map, trunc_exp, trunc_log, word_map
from .coverage import (
    CoverCertificate,
    congruence_cover_check,
    fold_cover_check,
    grade_generation_check,
    greedy_conjugators_modp,
    open_image_exponent,
)
from .errors import (
    BadModulus,
    BudgetExceeded,
    CorruptCache,
    CorruptRecord,
    CoverageFailed,
    EmptyChartLayer,
    FormatVersionMismatch,
    NonInvertibleDenominator,
    NotInChartDomain,
    NotSymmetric,
    PrecisionExhausted,
    SingularMatrix,
    SpecgapError,
    WrongLevel,
)
from .exact import PadicTruncMatrix, RationalMatrix, ResidueMatrix, invert_mod, reduce_mod
from .groups import (
    CongruenceLayer,
    GroupTable,
    SubsetHandle,
    congruence_kernel,
    enumerate_group,
    kernel_table_from_basis,
    load_table,
    product_fold,
    save_table,
    subset_mul,
)
from .pipeline import (
    InductionCertificate,
    StudyConfig,
    load_study,
    persist_study,
    run_induce,
    verify_study,
)
from .saturation import (
    ConjugatorCertificate,
    SpanLattice,
    adjoint_saturate,
    grade_basis_from_words,
    lie_lattice_from_group,
    lie_lattice_from_words,
    select_conjugators,
)
from .spectral import (
    AveragingOperator,
    CombineRecord,
    SpectralReport,
    combine_empirical,
    expansion_lower_bound,
    lambda_of,
)
from .words import Word, word_stream

__version__ = "0.1.0"

__all__ = [
    "AveragingOperator",
    "BadModulus",
    "BudgetExceeded",
    "ChartConfig",
    "CombineRecord",
    "CongruenceLayer",
    "ConjugatorCertificate",
    "CorruptCache",
    "CorruptRecord",
    "CoverCertificate",
    "CoverageFailed",
    "EmptyChartLayer",
    "FormatVersionMismatch",
    "GroupTable",
    "InductionCertificate",
    "LieVector",
    "NonInvertibleDenominator",
    "NotInChartDomain",
    "NotSymmetric",
    "PadicTruncMatrix",
    "PrecisionExhausted",
    "RationalMatrix",
    "ResidueMatrix",
    "SingularMatrix",
    "SpanLattice",
    "SpecgapError",
    "SpectralReport",
    "StudyConfig",
    "SubsetHandle",
    "Word",
    "WrongLevel",
    "adjoint_saturate",
    "chart_floor",
    "combine_empirical",
    "congruence_cover_check",
    "congruence_kernel",
    "enumerate_group",
    "expansion_lower_bound",
    "fold_cover_check",
    "grade_basis_from_words",
    "grade_generation_check",
    "grade_map",
    "greedy_conjugators_modp",
    "invert_mod",
    "kernel_table_from_basis",
    "lambda_of",
    "lie_lattice_from_group",
    "lie_lattice_from_words",
    "load_study",
    "load_table",
    "open_image_exponent",
    "persist_study",
    "product_fold",
    "reduce_mod",
    "run_induce",
    "save_table",
    "select_conjugators",
    "subset_mul",
    "trunc_exp",
    "trunc_log",
    "verify_study",
    "word_map",
    "word_stream",
]
