"""Speech corpus forging and streaming-inference utilities."""

import os
from pathlib import Path

_packaged = Path(__file__).parent / "data"
if _packaged.is_dir() and not os.environ.get("TOUCHFORGE_DATA_DIR"):
    os.environ["TOUCHFORGE_DATA_DIR"] = str(_packaged)

from ._core import (  # noqa: E402
    __version__,
    ConfigError,
    Error,
    aggregate_seeds,
    align,
    crossfade,
    cross_validate,
    data_dir,
    estimate_first_packet_latency,
    inference_mask,
    pack_asr,
    pack_tts,
    parse_config,
    per,
    plan_chunks,
    read_manifest,
    run_pipeline,
    segment_wav,
    should_drop,
    sim_average,
    split_script_runs,
    strip_punctuation,
    to_phonemes,
    tokenize,
    training_mask,
    wer,
    write_manifest,
)

__all__ = [name for name in dir() if not name.startswith("_")]
