"""Scripted vs spontaneous speech classification.

Thin wrapper over the C++ core; the command-line tool ``ssc`` drives full
corpus runs.
"""

from ._ssc import (
    SAMPLE_RATE,
    HANDCRAFTED_DIMS,
    Checkpoint,
    InvalidArgument,
    IoError,
    __version__,
    aggregate,
    chunk,
    class_score_summary,
    class_score_top_k_counts,
    estimate_f0,
    extract_handcrafted,
    f1_per_class,
    group_language,
    handcrafted_feature_names,
    load_audio,
    predict,
    prior_bias,
    read_feature_file,
    resample,
    roc_auc,
    speech_segments,
    stratified_kfold,
    synth_corpus,
    synth_episode,
    write_feature_file,
    write_wav,
)

__all__ = [name for name in dir() if not name.startswith("_")] + ["__version__"]
