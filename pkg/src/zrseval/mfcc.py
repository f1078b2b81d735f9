"""39-dimensional MFCC + delta + delta-delta front-end.

Column layout is ``[c1..c12, logE, d(c1..logE), dd(c1..logE)]``.
"""

from __future__ import annotations

import wave
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.fft import dct

from .featio import FeatureSequence

LOG_FLOOR = 1e-10
PREEMPHASIS = 0.97


@dataclass(frozen=True)
class MfccConfig:
    sample_rate: int = 16000
    window_len: float = 0.025
    hop: float = 0.010
    n_mel_filters: int = 26
    n_cepstra: int = 12
    delta_window: int = 2
    window_fn: str = "hamming"
    normalize: bool = False  # per-utterance mean/variance normalization

    def __post_init__(self):
        if not self.window_len > self.hop > 0:
            raise ValueError("need window_len > hop > 0")
        if not 0 < self.n_cepstra < self.n_mel_filters:
            raise ValueError("need 0 < n_cepstra < n_mel_filters")
        if self.delta_window < 1:
            raise ValueError("delta_window must be >= 1")
        if self.window_fn not in ("hamming", "hann"):
            raise ValueError(f"unknown window function {self.window_fn!r}")
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be > 0")

    @property
    def window_samples(self) -> int:
        return int(round(self.window_len * self.sample_rate))

    @property
    def hop_samples(self) -> int:
        return int(round(self.hop * self.sample_rate))

    @property
    def n_fft(self) -> int:
        return 1 << (self.window_samples - 1).bit_length()


@dataclass(frozen=True, eq=False)
class PcmSignal:
    samples: np.ndarray
    sample_rate: int = 16000

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValueError("PCM signal must be single-channel")
        if not np.all(np.isfinite(samples)):
            raise ValueError("PCM signal contains non-finite samples")
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be > 0")
        object.__setattr__(self, "samples", samples)


def read_wav(path) -> PcmSignal:
    """16-bit little-endian mono WAV -> samples scaled to [-1, 1)."""
    with wave.open(str(path), "rb") as w:
        if w.getnchannels() != 1:
            raise ValueError(f"{path}: expected mono audio, found {w.getnchannels()} channels")
        if w.getsampwidth() != 2:
            raise ValueError(f"{path}: expected 16-bit samples")
        rate = w.getframerate()
        data = np.frombuffer(w.readframes(w.getnframes()), dtype="<i2")
    return PcmSignal(data.astype(np.float64) / 32768.0, rate)


def write_wav(path, signal: PcmSignal) -> None:
    pcm = np.clip(np.round(signal.samples * 32768.0), -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(signal.sample_rate)
        w.writeframes(pcm.tobytes())


def read_raw_f32(path, sample_rate: int = 16000) -> PcmSignal:
    return PcmSignal(np.fromfile(path, dtype="<f4").astype(np.float64), sample_rate)


def read_audio(path, sample_rate: int = 16000) -> PcmSignal:
    path = Path(path)
    if path.suffix.lower() == ".wav":
        return read_wav(path)
    return read_raw_f32(path, sample_rate)


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m) / 2595.0) - 1.0)


def mel_filterbank(n_filters: int, n_fft: int, sample_rate: int) -> np.ndarray:
    """Triangular filters equally spaced on the mel scale from 0 Hz to Nyquist.

    Returns an ``(n_filters, n_fft // 2 + 1)`` weight matrix.
    """
    edges = mel_to_hz(np.linspace(0.0, hz_to_mel(sample_rate / 2.0), n_filters + 2))
    freqs = np.arange(n_fft // 2 + 1) * sample_rate / n_fft
    lo, mid, hi = edges[:-2, None], edges[1:-1, None], edges[2:, None]
    rising = (freqs - lo) / (mid - lo)
    falling = (hi - freqs) / (hi - mid)
    return np.clip(np.minimum(rising, falling), 0.0, None)


def frame_signal(samples: np.ndarray, window: int, hop: int) -> np.ndarray:
    n_frames = 1 + (len(samples) - window) // hop
    idx = np.arange(window)[None, :] + hop * np.arange(n_frames)[:, None]
    return samples[idx]


def _delta(x: np.ndarray, window: int) -> np.ndarray:
    n = x.shape[0]
    padded = np.concatenate([np.repeat(x[:1], window, 0), x, np.repeat(x[-1:], window, 0)])
    out = np.zeros_like(x, dtype=np.float64)
    for k in range(1, window + 1):
        out += k * (padded[window + k:window + k + n] - padded[window - k:window - k + n])
    return out / (2 * sum(k * k for k in range(1, window + 1)))


def delta(seq: FeatureSequence, window: int = 2) -> FeatureSequence:
    """Regression delta over +-``window`` frames, boundary frames replicated."""
    if window < 1:
        raise ValueError("delta window must be >= 1")
    return FeatureSequence(_delta(np.asarray(seq.frames, dtype=np.float64), window),
                           seq.frame_shift, seq.utterance_id)


def extract_mfcc(signal: PcmSignal, cfg: MfccConfig | None = None, utterance_id: str = "") -> FeatureSequence:
    cfg = cfg or MfccConfig()
    if signal.sample_rate != cfg.sample_rate:
        raise ValueError(
            f"sample rate mismatch: signal is {signal.sample_rate} Hz, config expects {cfg.sample_rate} Hz"
        )
    win, hop = cfg.window_samples, cfg.hop_samples
    x = signal.samples
    if len(x) < win:
        raise ValueError(f"signal has {len(x)} samples, shorter than one {win}-sample window")

    emphasized = np.empty_like(x)
    emphasized[0] = x[0]
    emphasized[1:] = x[1:] - PREEMPHASIS * x[:-1]

    frames = frame_signal(emphasized, win, hop)
    taper = np.hamming(win) if cfg.window_fn == "hamming" else np.hanning(win)
    frames = frames * taper

    energy = np.log(np.maximum(np.sum(frames ** 2, axis=1), LOG_FLOOR))
    power = np.abs(np.fft.rfft(frames, n=cfg.n_fft, axis=1)) ** 2
    fbank = power @ mel_filterbank(cfg.n_mel_filters, cfg.n_fft, cfg.sample_rate).T
    log_fbank = np.log(np.maximum(fbank, LOG_FLOOR))
    # c0 is dropped: log energy takes its place
    ceps = dct(log_fbank, type=2, norm="ortho", axis=1)[:, 1:cfg.n_cepstra + 1]

    static = np.column_stack([ceps, energy])
    d1 = _delta(static, cfg.delta_window)
    d2 = _delta(d1, cfg.delta_window)
    feats = np.hstack([static, d1, d2])
    if cfg.normalize:
        std = feats.std(axis=0)
        feats = (feats - feats.mean(axis=0)) / np.where(std > 0, std, 1.0)
    return FeatureSequence(feats, cfg.hop, utterance_id)
