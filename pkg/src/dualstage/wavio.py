"""Mono WAV read/write.

Accepts 16-bit PCM and 32-bit float files, hands samples around as
float64 in [-1, 1), and writes back in the subtype that came in so a
pass-through run is bit exact.
"""

import numpy as np
from scipy.io import wavfile

from .errors import AudioIOError, InputError, UsageError

PCM16 = "pcm16"
FLOAT32 = "float32"

_PCM_SCALE = 32768.0


def read_wav(path):
    """Read a mono WAV file.

    Returns (samples as float64, sample rate, subtype), where subtype
    is "pcm16" or "float32".
    """
    try:
        rate, data = wavfile.read(path)
    except FileNotFoundError:
        raise
    except (ValueError, OSError) as exc:
        raise AudioIOError(f"{path}: not a readable WAV file ({exc})") from exc
    if data.ndim != 1:
        raise InputError(
            f"{path}: expected mono audio, file has {data.shape[1]} channels"
        )
    if data.dtype == np.int16:
        return data.astype(np.float64) / _PCM_SCALE, int(rate), PCM16
    if data.dtype == np.float32:
        return data.astype(np.float64), int(rate), FLOAT32
    raise InputError(
        f"{path}: unsupported sample format {data.dtype}; "
        f"expected 16-bit PCM or 32-bit float"
    )


def write_wav(path, samples, sample_rate_hz: int, subtype: str = PCM16) -> None:
    """Write mono float64 samples as 16-bit PCM or 32-bit float."""
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim != 1:
        raise UsageError(f"{path}: expected mono audio, got shape {x.shape}")
    if subtype == PCM16:
        scaled = np.clip(np.round(x * _PCM_SCALE), -32768, 32767)
        payload = scaled.astype(np.int16)
    elif subtype == FLOAT32:
        payload = x.astype(np.float32)
    else:
        raise UsageError(f"unsupported output subtype {subtype!r}")
    try:
        wavfile.write(path, int(sample_rate_hz), payload)
    except OSError as exc:
        raise AudioIOError(f"{path}: cannot write WAV file ({exc})") from exc
