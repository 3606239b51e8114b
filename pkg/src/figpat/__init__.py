"""figpat: statement-driven generation, labeling and splitting of
geometric figure datasets."""
from __future__ import annotations

from .challenges import (
    COLOR_PAIRS,
    LATENT_STATEMENT_ID,
    Challenge1Config,
    ChallengeSpec,
    LatentRegion,
    challenge2_universe,
    challenge3_universe,
    corrupt_challenge1,
    definitions_example,
    generate_challenge1,
    get_challenge,
    validate_challenge1,
    validate_challenge2,
    validate_challenge3,
)
from .dataio import (
    Dataset,
    DatasetRecord,
    check_labels,
    confusion,
    read_dataset,
    record_truth,
    write_dataset,
)
from .dsl import (
    Statement,
    Vocabulary,
    canonical_key,
    evaluate,
    load_statements,
    parse_statement,
    render_statement_text,
    save_statements,
)
from .errors import (
    ConfigError,
    FigpatError,
    GeneratorUnsound,
    Infeasible,
    InvalidAlpha,
    IoFailure,
    LabelInconsistency,
    MissingStatement,
    NoNearMissFound,
    ParseFailure,
    PlacementExhausted,
    StatementError,
    StatementSyntaxError,
    StatementTypeError,
    UnknownStatementId,
    YieldTooLow,
)
from .gestalt import (
    DEFAULT_GESTALT,
    CircleFit,
    GestaltConfig,
    SymmetryResult,
    cluster_by_proximity,
    is_circular_arrangement,
    is_flower,
    is_symmetric,
)
from .model import (
    DEFAULT_COLORS,
    DEFAULT_SHAPES,
    DEFAULT_UNIVERSE,
    Figure,
    ObjectSpec,
    UniverseConfig,
    ValidationReport,
    Violation,
    object_distance,
    shape_area,
    shape_vertices,
    validate_figure,
)
from .render import PALETTE, RenderStyle, render_png, render_svg, save_svg
from .sampler import (
    EditOp,
    GenerationReport,
    NearMiss,
    Pattern,
    apply_edit,
    apply_edits,
    child_rng,
    generate_near_misses,
    generate_negatives,
    generate_positives,
    place_objects,
    register_figure_sampler,
    register_positive_generator,
    sample_figure,
)
from .splits import (
    SplitItem,
    SplitResult,
    atom_profile,
    chernoff_divergence,
    compound_profile,
    design_split,
    extract_distributions,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
