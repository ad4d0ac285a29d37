"""Scene splitting, caption indexing and METEOR search over video clips."""

from ._vidsearch import (
    DEFAULT_BINS_PER_CHANNEL,
    DEFAULT_FRAME_STRIDE,
    DEFAULT_SCENE_THRESHOLD,
    DEFAULT_TOP_K,
    Error,
    Frame,
    InvalidInputError,
    InvalidQueryError,
    Manifest,
    MissingCaptionError,
    ParseError,
    ReferentialError,
    SentenceRecord,
    TransportError,
    VideoRecord,
    align,
    compute_histogram,
    detect_scenes,
    detect_scenes_in_directory,
    filter_sample,
    histogram_distance,
    load_index,
    meanpool,
    meteor_score,
    parse_index,
    parse_manifest,
    parse_synonym_table,
    rank,
    read_ppm,
    sample_indices,
    save_index,
    serialize_index,
    suffix_stem,
    tokenize,
    write_ppm,
)

__all__ = [name for name in dir() if not name.startswith("_")]
