"""Checkpoints, run configuration, audio ingestion and the command line."""

from .audio import SyntheticCorpus, SyntheticSpec, Utterance, WavCorpus, load_wav, synth_utterance, write_wav
from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .runconfig import DataConfig, OutputConfig, RunConfig, desk_distill_config, parse, serialize

__all__ = [
    "Checkpoint",
    "DataConfig",
    "OutputConfig",
    "RunConfig",
    "SyntheticCorpus",
    "SyntheticSpec",
    "Utterance",
    "WavCorpus",
    "desk_distill_config",
    "load_checkpoint",
    "load_wav",
    "parse",
    "save_checkpoint",
    "serialize",
    "synth_utterance",
    "write_wav",
]
