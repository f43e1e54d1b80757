"""Homoglyph perturbation toolkit for homework prompts.

Workflow: parse a homoglyph database, rewrite a question to create a
numeric target if it lacks one, probe which homoglyphs a model fails to
recognize, apply a minimal perturbation plan, and log attempts until the
model is fooled. A CLI and a local HTTP service wrap the same library.
"""

from .homoglyphs import (
    DatabaseSyntaxError,
    DecodeError,
    EmptyDatabaseError,
    GlyphAnnotation,
    HomoglyphDatabase,
    HomoglyphGroup,
    Readability,
    Recognizability,
    load_database,
    lookup_homoglyphs,
    parse_homoglyph_file,
    skeleton,
)
from .perturb import (
    Edit,
    HashMismatch,
    InvalidEdit,
    LengthMismatch,
    PerturbationPlan,
    Role,
    TargetSuggestion,
    apply_plan,
    build_plan,
    count_perturbed_chars,
    invert_plan,
    suggest_targets,
    text_hash,
    validate_plan,
)
from .probe import (
    ProbeLedger,
    ProbeResult,
    ProbeVerdict,
    UnprintableError,
    effective_candidates,
    make_probe_prompt,
    record_probe,
)
from .llm import (
    ConfigError,
    Exchange,
    MockProvider,
    ProviderConfig,
    TransportStatus,
    make_mock_provider,
    send_prompt,
)
from .questions import (
    AmbiguousVariable,
    EmptyCorpusError,
    PhraseNotFound,
    Question,
    VariableNotFound,
    inject_coefficient,
    load_corpus,
    question_stats,
    save_corpus,
    variable_template,
)
from .session import (
    Attempt,
    AttemptVerdict,
    BiasAnnotation,
    EmptySampleError,
    IntegrityError,
    NoFooledAttempts,
    SequenceError,
    SessionStore,
    SummaryStats,
    load_reference_stats,
    summarize,
)

__version__ = "0.1.0"
