"""Audio ingestion and the 187 acoustic features.

Frame pipeline: 25 ms Hamming windows, 10 ms hop.  MFCCs use pre-emphasis
0.97, a 26-filter mel bank, log with a tiny floor (catches exact zeros
without disturbing gain invariance of coefficients 1..14) and an
orthonormal DCT-II keeping coefficients 1..14; deltas and delta-deltas
come from +-2 frame regression, giving 42 tracked coefficients.  Pauses
are energy-gated silences (frame RMS below a fraction of the max) lasting
at least the short-pause floor.  Everything is deterministic: fixed
reduction order, no RNG.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.io import wavfile

MFCC_KINDS = ("s", "d", "dd")
MFCC_STATS = ("mean", "var", "skew", "kurt")


class UnsupportedFormatError(ValueError):
    """Audio file is not PCM/float WAV."""


@dataclass
class AudioSignal:
    samples: np.ndarray          # float64 in [-1, 1]
    sample_rate: int

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("samples must be finite")

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate


@dataclass
class FrameConfig:
    window_ms: float = 25.0
    hop_ms: float = 10.0
    preemphasis: float = 0.97
    n_mels: int = 26
    n_ceps: int = 14
    log_floor: float = 1e-30
    vad_threshold_frac: float = 0.02    # of max frame RMS
    short_pause_s: float = 0.15
    long_pause_s: float = 0.40
    f0_min_hz: float = 75.0
    f0_max_hz: float = 500.0
    f0_voicing: float = 0.30            # normalized autocorrelation gate

    def __post_init__(self):
        if not (self.window_ms >= self.hop_ms > 0):
            raise ValueError("need window_ms >= hop_ms > 0")

    def window_samples(self, sr: int) -> int:
        return int(round(self.window_ms * sr / 1000.0))

    def hop_samples(self, sr: int) -> int:
        return int(round(self.hop_ms * sr / 1000.0))


def read_wav(path) -> AudioSignal:
    """Read a PCM or float WAV; stereo is downmixed by channel averaging."""
    try:
        sr, data = wavfile.read(path)
    except FileNotFoundError:
        raise
    except Exception as exc:   # scipy raises ValueError/struct.error/EOFError
        raise UnsupportedFormatError(f"{path}: {exc}") from exc
    if data.dtype == np.int16:
        samples = data / 32768.0
    elif data.dtype == np.int32:
        samples = data / 2147483648.0
    elif data.dtype == np.uint8:
        samples = (data.astype(np.float64) - 128.0) / 128.0
    elif data.dtype in (np.float32, np.float64):
        samples = data.astype(np.float64)
    else:
        raise UnsupportedFormatError(f"{path}: unsupported sample dtype {data.dtype}")
    if samples.ndim == 2:
        samples = samples.mean(axis=1)
    return AudioSignal(samples=samples, sample_rate=int(sr))


def write_wav(path, sig: AudioSignal):
    """16-bit PCM writer (fixture generation and round-trip tests); scale
    matches read_wav's 1/32768 so a round trip stays within half an LSB."""
    scaled = np.clip(np.round(sig.samples * 32768.0), -32768, 32767)
    wavfile.write(path, sig.sample_rate, scaled.astype(np.int16))


def restrict_to_segments(sig: AudioSignal,
                         segments_ms: list[tuple[int, int]]) -> AudioSignal:
    """Concatenate the given (start_ms, end_ms) spans of the signal."""
    sr = sig.sample_rate
    parts = []
    for start, end in segments_ms:
        a = max(0, int(round(start * sr / 1000.0)))
        b = min(len(sig.samples), int(round(end * sr / 1000.0)))
        if b > a:
            parts.append(sig.samples[a:b])
    samples = np.concatenate(parts) if parts else np.zeros(0)
    return AudioSignal(samples=samples, sample_rate=sr)


def frame_signal(samples: np.ndarray, sr: int, cfg: FrameConfig) -> np.ndarray:
    """(n_frames, window) view of the signal; frames fully inside the buffer."""
    win = cfg.window_samples(sr)
    hop = cfg.hop_samples(sr)
    if len(samples) < win:
        return np.zeros((0, win))
    n = 1 + (len(samples) - win) // hop
    idx = np.arange(win)[None, :] + hop * np.arange(n)[:, None]
    return samples[idx]


def _moments(x: np.ndarray) -> tuple[float, float, Optional[float], Optional[float]]:
    """Population mean/variance and skewness/excess kurtosis; the shape
    moments are missing for constant input."""
    mean = float(np.mean(x))
    centered = x - mean
    m2 = float(np.mean(centered ** 2))
    if m2 == 0.0:
        return mean, 0.0, None, None
    m3 = float(np.mean(centered ** 3))
    m4 = float(np.mean(centered ** 4))
    return mean, m2, m3 / m2 ** 1.5, m4 / m2 ** 2 - 3.0


# ---------------------------------------------------------------------------
# Zero-crossing rate

def frame_zcr(frames: np.ndarray) -> np.ndarray:
    """Sign changes per sample within each frame (sign(0) counts positive)."""
    signs = np.where(frames >= 0.0, 1, -1)
    changes = np.sum(signs[:, 1:] != signs[:, :-1], axis=1)
    return changes / frames.shape[1]


def zcr_stats(sig: AudioSignal, cfg: FrameConfig) -> dict[str, Optional[float]]:
    frames = frame_signal(sig.samples, sig.sample_rate, cfg)
    if frames.shape[0] < 1:
        raise ValueError("signal shorter than one analysis window")
    mean, var, skew, kurt = _moments(frame_zcr(frames))
    return {"zcr_mean": mean, "zcr_var": var, "zcr_skew": skew, "zcr_kurt": kurt}


# ---------------------------------------------------------------------------
# Fundamental frequency

def _frame_f0(frame: np.ndarray, sr: int, cfg: FrameConfig) -> Optional[float]:
    frame = frame - frame.mean()
    energy = float(np.dot(frame, frame))
    if energy <= 0.0:
        return None
    lag_min = max(2, int(sr / cfg.f0_max_hz))
    lag_max = min(len(frame) - 1, int(np.ceil(sr / cfg.f0_min_hz)))
    if lag_max <= lag_min:
        return None
    ac = np.correlate(frame, frame, mode="full")[len(frame) - 1:]
    window = ac[lag_min:lag_max + 1]
    best = int(np.argmax(window)) + lag_min
    if ac[best] / ac[0] < cfg.f0_voicing:
        return None
    # Parabolic interpolation around the peak for sub-sample lag precision.
    lag = float(best)
    if lag_min < best < lag_max:
        y0, y1, y2 = ac[best - 1], ac[best], ac[best + 1]
        denom = y0 - 2 * y1 + y2
        if denom != 0:
            lag += 0.5 * (y0 - y2) / denom
    return sr / lag


def f0_stats(sig: AudioSignal, cfg: FrameConfig) -> dict[str, Optional[float]]:
    """Avg/min/max/median F0 over voiced frames (autocorrelation peak within
    the configured range, on frames passing the energy gate); all four are
    missing when nothing is voiced."""
    frames = frame_signal(sig.samples, sig.sample_rate, cfg)
    out = {"f0_mean": None, "f0_min": None, "f0_max": None, "f0_median": None}
    if frames.shape[0] == 0:
        return out
    rms = np.sqrt(np.mean(frames ** 2, axis=1))
    gate = cfg.vad_threshold_frac * float(rms.max())
    values = []
    for i in range(frames.shape[0]):
        if rms[i] < gate or rms[i] == 0.0:
            continue
        f0 = _frame_f0(frames[i], sig.sample_rate, cfg)
        if f0 is not None:
            values.append(f0)
    if not values:
        return out
    arr = np.asarray(values)
    return {"f0_mean": float(arr.mean()), "f0_min": float(arr.min()),
            "f0_max": float(arr.max()), "f0_median": float(np.median(arr))}


# ---------------------------------------------------------------------------
# MFCC

def mel_scale(hz):
    return 2595.0 * np.log10(1.0 + np.asarray(hz) / 700.0)


def mel_inverse(mel):
    return 700.0 * (10.0 ** (np.asarray(mel) / 2595.0) - 1.0)


def mel_filterbank(n_mels: int, n_fft: int, sr: int) -> np.ndarray:
    """(n_mels, n_fft//2 + 1) triangular filters on mel-spaced centers."""
    nyquist = sr / 2.0
    points = mel_inverse(np.linspace(mel_scale(0.0), mel_scale(nyquist), n_mels + 2))
    bin_freqs = np.arange(n_fft // 2 + 1) * sr / n_fft
    bank = np.zeros((n_mels, bin_freqs.size))
    for m in range(n_mels):
        left, center, right = points[m], points[m + 1], points[m + 2]
        rising = (bin_freqs - left) / (center - left)
        falling = (right - bin_freqs) / (right - center)
        bank[m] = np.maximum(0.0, np.minimum(rising, falling))
    return bank


def filter_center_freqs(n_mels: int, sr: int) -> np.ndarray:
    nyquist = sr / 2.0
    points = mel_inverse(np.linspace(mel_scale(0.0), mel_scale(nyquist), n_mels + 2))
    return points[1:-1]


def dct_matrix(n_out: int, n_in: int) -> np.ndarray:
    """Orthonormal DCT-II rows k = 0..n_out-1 over n_in inputs."""
    k = np.arange(n_out)[:, None]
    n = np.arange(n_in)[None, :]
    mat = np.sqrt(2.0 / n_in) * np.cos(np.pi * (2 * n + 1) * k / (2.0 * n_in))
    mat[0, :] /= np.sqrt(2.0)
    return mat


def _deltas(coeffs: np.ndarray, span: int = 2) -> np.ndarray:
    """Regression deltas over +-span frames with edge replication."""
    n = coeffs.shape[0]
    padded = np.concatenate([np.repeat(coeffs[:1], span, axis=0), coeffs,
                             np.repeat(coeffs[-1:], span, axis=0)], axis=0)
    denom = 2.0 * sum(k * k for k in range(1, span + 1))
    out = np.zeros_like(coeffs)
    for k in range(1, span + 1):
        out += k * (padded[span + k:span + k + n] - padded[span - k:span - k + n])
    return out / denom


def mel_energies(sig: AudioSignal, cfg: FrameConfig) -> np.ndarray:
    """(n_frames, n_mels) filterbank energies (pre-DCT stage, exposed for
    intermediate assertions)."""
    sr = sig.sample_rate
    emphasized = np.concatenate([sig.samples[:1],
                                 sig.samples[1:] - cfg.preemphasis * sig.samples[:-1]])
    frames = frame_signal(emphasized, sr, cfg)
    if frames.shape[0] == 0:
        return np.zeros((0, cfg.n_mels))
    win = frames.shape[1]
    n_fft = 1
    while n_fft < win:
        n_fft *= 2
    windowed = frames * np.hamming(win)
    power = np.abs(np.fft.rfft(windowed, n=n_fft, axis=1)) ** 2 / n_fft
    return power @ mel_filterbank(cfg.n_mels, n_fft, sr).T


def mfcc_frames(sig: AudioSignal, cfg: FrameConfig) -> np.ndarray:
    """(n_frames, 42) per-frame coefficients: statics 1..14, deltas,
    delta-deltas."""
    energies = mel_energies(sig, cfg)
    log_e = np.log(np.maximum(energies, cfg.log_floor))
    dct = dct_matrix(cfg.n_ceps + 1, cfg.n_mels)
    static = log_e @ dct[1:].T          # drop coefficient 0: gain carrier
    d1 = _deltas(static)
    d2 = _deltas(d1)
    return np.concatenate([static, d1, d2], axis=1)


def mfcc_block(sig: AudioSignal, cfg: FrameConfig) -> dict[str, Optional[float]]:
    """168 features: mean/variance/skewness/kurtosis of each of the 42
    coefficients across frames.  Missing wholesale with fewer than 3 frames
    (delta regression needs neighbors)."""
    names = mfcc_feature_names(cfg)
    frames = frame_signal(sig.samples, sig.sample_rate, cfg)
    if frames.shape[0] < 3:
        return {name: None for name in names}
    coeffs = mfcc_frames(sig, cfg)
    feats: dict[str, Optional[float]] = {}
    col = 0
    for kind in MFCC_KINDS:
        for c in range(1, cfg.n_ceps + 1):
            mean, var, skew, kurt = _moments(coeffs[:, col])
            feats[f"mfcc_{kind}{c}_mean"] = mean
            feats[f"mfcc_{kind}{c}_var"] = var
            feats[f"mfcc_{kind}{c}_skew"] = skew
            feats[f"mfcc_{kind}{c}_kurt"] = kurt
            col += 1
    return feats


def mfcc_feature_names(cfg: FrameConfig | None = None) -> list[str]:
    n_ceps = cfg.n_ceps if cfg is not None else 14
    return [f"mfcc_{kind}{c}_{stat}"
            for kind in MFCC_KINDS
            for c in range(1, n_ceps + 1)
            for stat in MFCC_STATS]


# ---------------------------------------------------------------------------
# Pauses and durations

def detect_silences(sig: AudioSignal, cfg: FrameConfig) -> list[tuple[float, float]]:
    """(start_s, duration_s) of energy-gated silences lasting at least the
    short-pause floor.  A run of k silent frames spans (k-1)*hop + window."""
    frames = frame_signal(sig.samples, sig.sample_rate, cfg)
    if frames.shape[0] == 0:
        return []
    rms = np.sqrt(np.mean(frames ** 2, axis=1))
    theta = cfg.vad_threshold_frac * float(rms.max())
    silent = rms < theta
    hop_s = cfg.hop_samples(sig.sample_rate) / sig.sample_rate
    win_s = cfg.window_samples(sig.sample_rate) / sig.sample_rate
    runs = []
    i = 0
    while i < silent.size:
        if silent[i]:
            j = i
            while j + 1 < silent.size and silent[j + 1]:
                j += 1
            duration = (j - i) * hop_s + win_s
            if duration >= cfg.short_pause_s:
                runs.append((i * hop_s, duration))
            i = j + 1
        else:
            i += 1
    return runs


def pause_and_duration_features(sig: AudioSignal, cfg: FrameConfig,
                                n_words: int, n_fillers: int
                                ) -> dict[str, Optional[float]]:
    """9 pause/filler features + 2 durations.  Word-anchored ratios use the
    spoken-token count including fillers and are missing with zero words."""
    silences = detect_silences(sig, cfg)
    durations = [d for _, d in silences]
    total = sig.duration
    pause_total = float(sum(durations))
    spoken = max(total - pause_total, 0.0)
    n_pauses = len(durations)
    n_tokens = n_words + n_fillers

    feats: dict[str, Optional[float]] = {}
    feats["pause_total_dur"] = pause_total
    feats["pause_mean_dur"] = pause_total / n_pauses if n_pauses else 0.0
    feats["pause_long_count"] = float(sum(1 for d in durations if d > cfg.long_pause_s))
    feats["pause_short_count"] = float(sum(1 for d in durations
                                           if cfg.short_pause_s <= d <= cfg.long_pause_s))
    feats["pause_to_word_ratio"] = n_pauses / n_tokens if n_tokens else None
    feats["filler_count"] = float(n_fillers)
    feats["filler_per_word"] = n_fillers / n_tokens if n_tokens else None
    feats["pause_to_speech_ratio"] = pause_total / spoken if spoken > 0 else None
    feats["pauses_per_min"] = (n_pauses / (total / 60.0)) if total > 0 else None
    feats["dur_total_sec"] = total
    feats["dur_spoken_sec"] = spoken
    return feats


PAUSE_FEATURE_NAMES = [
    "pause_total_dur", "pause_mean_dur", "pause_long_count", "pause_short_count",
    "pause_to_word_ratio", "filler_count", "filler_per_word",
    "pause_to_speech_ratio", "pauses_per_min",
]
F0_FEATURE_NAMES = ["f0_mean", "f0_min", "f0_max", "f0_median"]
DURATION_FEATURE_NAMES = ["dur_total_sec", "dur_spoken_sec"]
ZCR_FEATURE_NAMES = ["zcr_mean", "zcr_var", "zcr_skew", "zcr_kurt"]


def acoustic_feature_names(cfg: FrameConfig | None = None) -> list[str]:
    """The 187 acoustic feature names in canonical order."""
    return (PAUSE_FEATURE_NAMES + F0_FEATURE_NAMES + DURATION_FEATURE_NAMES
            + ZCR_FEATURE_NAMES + mfcc_feature_names(cfg))
