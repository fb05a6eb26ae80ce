"""Abstaining multi-task text classification with built-in explainability.

The heavy lifting lives in the compiled ``dacxai._core`` extension; this
package re-exports its public surface. ``NumArray`` values support the buffer
protocol (``numpy.asarray(x)`` views them), and every function declared on
``NumArray`` also accepts numpy arrays directly.
"""

from ._core import (  # noqa: F401
    AleMatrix,
    AleRowMeta,
    AlphaRecord,
    AttributionRecord,
    Checkpoint,
    ClassScore,
    CohortSpec,
    ConfigError,
    ConfusionMatrix,
    Corpus,
    CorpusSpec,
    DacConfig,
    DacLoss,
    EpochLogRow,
    EpochTaskMetrics,
    EvalResult,
    HeadSpec,
    KdeGrid,
    KeywordAnnotation,
    LayerParams,
    LogitLoss,
    ModelConfig,
    MtcnnModel,
    NTaskLoss,
    NumArray,
    PcaResult,
    PipelineConfig,
    PredictionRecord,
    Provenance,
    SaturationError,
    ScoreModel,
    ScoreReport,
    SplitResult,
    TargetKind,
    TaskOutput,
    TaskSchema,
    TaskScore,
    TaskTunerState,
    TokenAttribution,
    TokenizedReport,
    TradeoffPoint,
    TradeoffTask,
    TrainResult,
    TuneMode,
    TunerState,
    Vocabulary,
    WordAttribution,
    __version__,
    aggregate_words,
    build_cohort,
    confusion_topk,
    dac_loss,
    dac_loss_from_logits,
    default_sweep_targets,
    evaluate,
    generate_corpus,
    grad_input,
    init_params,
    io,
    kde2d,
    keyword_annotations,
    load_pipeline_config,
    model_config_for,
    ntask_loss,
    parse_pipeline_config,
    pca,
    perturbation_explain,
    predict,
    preprocess,
    run_pipeline,
    run_pipeline_json,
    score,
    second_choice_matrix,
    sign_agreement,
    split,
    threshold_for_top_columns,
    tradeoff_sweep,
    train,
    truncate,
)

__all__ = [name for name in dir() if not name.startswith("_")] + ["__version__"]
