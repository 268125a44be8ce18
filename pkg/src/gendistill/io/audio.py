"""Waveform ingestion: synthetic utterances and 16-bit PCM WAV files."""

from __future__ import annotations

import wave as _wave
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import ConfigError, PersistenceError, UnsupportedFormatError

# validation utterances draw from indices at and above this offset
VAL_OFFSET = 1 << 30


@dataclass(frozen=True)
class SyntheticSpec:
    """Mixtures of sinusoids in ``n_bands`` frequency bands plus Gaussian noise.

    Each utterance has one dominant cosine of amplitude ``amplitude`` inside
    its labelled band and ``n_components - 1`` weaker sinusoids anywhere in the
    usable range. Frequencies are fractions of the sample rate.
    """

    sample_rate: int = 16000
    min_samples: int = 512
    max_samples: int = 512
    n_components: int = 3
    noise: float = 0.05
    amplitude: float = 1.0
    n_bands: int = 8
    low_freq: float = 0.02
    high_freq: float = 0.45
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.min_samples <= self.max_samples:
            raise ConfigError("need 0 < min_samples <= max_samples")
        if self.n_components < 1 or self.n_bands < 1:
            raise ConfigError("n_components and n_bands must be >= 1")
        if not 0 < self.low_freq < self.high_freq <= 0.5:
            raise ConfigError("need 0 < low_freq < high_freq <= 0.5")
        if self.noise < 0:
            raise ConfigError("noise must be >= 0")

    def band_edges(self, band: int) -> tuple[float, float]:
        width = (self.high_freq - self.low_freq) / self.n_bands
        lo = self.low_freq + band * width
        return lo, lo + width


@dataclass(frozen=True)
class Utterance:
    wave: np.ndarray
    band: int
    index: int
    dominant_freq: float
    n_bands: int

    @property
    def high_band(self) -> int:
        """Binary label: 1 when the dominant energy sits in the upper half of the bands."""
        return int(self.band >= self.n_bands // 2)


def synth_utterance(spec: SyntheticSpec, index: int) -> Utterance:
    """Deterministic utterance number ``index`` of ``spec``."""
    if index < 0:
        raise ConfigError(f"utterance index must be >= 0, got {index}")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([spec.seed, index])))
    n = int(rng.integers(spec.min_samples, spec.max_samples + 1))
    band = int(rng.integers(spec.n_bands))
    lo, hi = spec.band_edges(band)
    width = hi - lo
    dominant = lo + width * rng.uniform(0.15, 0.85)
    t = np.arange(n, dtype=np.float64)
    wave = spec.amplitude * np.cos(2.0 * np.pi * dominant * t)
    for _ in range(spec.n_components - 1):
        freq = rng.uniform(spec.low_freq, spec.high_freq)
        amp = spec.amplitude * rng.uniform(0.05, 0.3)
        phase = rng.uniform(0.0, 2.0 * np.pi)
        wave += amp * np.sin(2.0 * np.pi * freq * t + phase)
    if spec.noise:
        wave += spec.noise * rng.standard_normal(n)
    return Utterance(wave, band, index, dominant, spec.n_bands)


class SyntheticCorpus:
    """Training and validation splits drawn from disjoint index ranges."""

    def __init__(self, spec: SyntheticSpec, n_train: int, n_val: int | None = None):
        if n_train < 1:
            raise ConfigError("n_train must be >= 1")
        self.spec = spec
        self.n_train = n_train
        self.n_val = max(1, n_train // 16) if n_val is None else n_val

    @property
    def train_indices(self) -> list[int]:
        return list(range(self.n_train))

    @property
    def val_indices(self) -> list[int]:
        return [VAL_OFFSET + i for i in range(self.n_val)]

    def wave(self, index: int) -> np.ndarray:
        return synth_utterance(self.spec, index).wave


class WavCorpus:
    """Sorted ``*.wav`` files; every 17th file (1/16 of the rest) is held out for validation."""

    def __init__(self, directory: str | Path):
        self.paths = sorted(Path(directory).glob("*.wav"))
        if not self.paths:
            raise PersistenceError(f"no .wav files in {directory}")
        val = set(range(16, len(self.paths), 17)) or {len(self.paths) - 1}
        self._val = sorted(val)
        self._train = [i for i in range(len(self.paths)) if i not in val] or self._val

    @property
    def train_indices(self) -> list[int]:
        return list(self._train)

    @property
    def val_indices(self) -> list[int]:
        return list(self._val)

    def wave(self, index: int) -> np.ndarray:
        return load_wav(self.paths[index])


def load_wav(path: str | Path) -> np.ndarray:
    """Mono 16-bit PCM WAV to float64 samples in [-1, 1)."""
    try:
        with _wave.open(str(path), "rb") as wf:
            channels = wf.getnchannels()
            width = wf.getsampwidth()
            if wf.getcomptype() != "NONE":
                raise UnsupportedFormatError(f"{path}: compression {wf.getcomptype()!r} unsupported, need PCM")
            if channels != 1:
                raise UnsupportedFormatError(f"{path}: channels={channels}, need mono")
            if width != 2:
                raise UnsupportedFormatError(f"{path}: sample width={8 * width} bits, need 16")
            frames = wf.readframes(wf.getnframes())
    except _wave.Error as exc:
        raise UnsupportedFormatError(f"{path}: audio format: {exc}") from exc
    except FileNotFoundError as exc:
        raise PersistenceError(f"{path}: {exc.strerror}") from exc
    return np.frombuffer(frames, dtype="<i2").astype(np.float64) / 32768.0


def write_wav(path: str | Path, samples: np.ndarray, sample_rate: int = 16000) -> None:
    """Write float samples in [-1, 1) as mono 16-bit PCM."""
    pcm = np.clip(np.round(np.asarray(samples) * 32768.0), -32768, 32767).astype("<i2")
    with _wave.open(str(path), "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(sample_rate)
        wf.writeframes(pcm.tobytes())
