"""Per-band minimum-statistics noise estimation.

The raw estimate is the exact minimum of the (pre-smoothed) band
magnitudes over a sliding window of num_subwindows * subwindow_len
frames, scaled by a fixed bias factor. A first-order smoother with a
per-band alpha turns the raw track into the noise magnitude estimate;
for the second stage the alpha is scaled up at low frame SNR so the
tracker follows faster where the first stage says the signal is mostly
noise.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConfigError, UsageError


@lru_cache(maxsize=64)
def _map_arrays(snr_map: tuple) -> tuple[np.ndarray, np.ndarray]:
    xs = np.array([p[0] for p in snr_map], dtype=float)
    ys = np.array([p[1] for p in snr_map], dtype=float)
    xs.flags.writeable = False
    ys.flags.writeable = False
    return xs, ys

# default Stage-2 map: multiplier 2.0 at and below 0 dB, 1.0 at and
# above 20 dB, linear between
DEFAULT_ALPHA_SNR_MAP = ((0.0, 2.0), (20.0, 1.0))


@dataclass(frozen=True)
class TrackerParams:
    """Noise tracker settings for one stage.

    subwindow_len and num_subwindows define the sliding minimum window
    of subwindow_len * num_subwindows frames. bias_factor compensates
    the low bias of the window minimum. alpha is the per-band smoothing
    factor (scalar or one value per band); alpha_snr_map, when set,
    maps a frame SNR in dB to a multiplier on alpha (piecewise linear,
    non-increasing). mag_smooth_alpha pre-smooths the band magnitudes
    ahead of the minimum search so the window minimum lands near the
    stationary level instead of deep in the fluctuation floor.
    """

    subwindow_len: int = 48
    num_subwindows: int = 8
    bias_factor: float = 1.2
    alpha: float | tuple[float, ...] = 0.5
    alpha_snr_map: tuple[tuple[float, float], ...] | None = None
    mag_smooth_alpha: float = 0.1
    scale_window_with_snr: bool = False

    def __post_init__(self):
        if self.subwindow_len < 1 or self.num_subwindows < 1:
            raise ConfigError("subwindow_len and num_subwindows must be at least 1")
        if self.bias_factor < 1.0:
            raise ConfigError(f"bias_factor must be >= 1, got {self.bias_factor}")
        alpha = np.asarray(self.alpha, dtype=float)
        if np.any(alpha < 0.0) or np.any(alpha > 1.0):
            raise ConfigError(f"alpha must lie in [0, 1], got {self.alpha}")
        if not 0.0 < self.mag_smooth_alpha <= 1.0:
            raise ConfigError(
                f"mag_smooth_alpha must lie in (0, 1], got {self.mag_smooth_alpha}"
            )
        if self.alpha_snr_map is not None:
            pts = tuple(self.alpha_snr_map)
            if len(pts) < 2:
                raise ConfigError("alpha_snr_map needs at least two points")
            xs = [p[0] for p in pts]
            ys = [p[1] for p in pts]
            if any(b <= a for a, b in zip(xs, xs[1:])):
                raise ConfigError("alpha_snr_map SNR breakpoints must be increasing")
            if any(b > a for a, b in zip(ys, ys[1:])):
                raise ConfigError("alpha_snr_map multipliers must be non-increasing")
            if any(y <= 0 for y in ys):
                raise ConfigError("alpha_snr_map multipliers must be positive")
        if self.scale_window_with_snr:
            # reserved knob: faster tracking is realised by alpha scaling
            # only; changing the window length per frame is not supported
            raise ConfigError("scale_window_with_snr is reserved and must stay False")

    @property
    def window_len(self) -> int:
        return self.subwindow_len * self.num_subwindows


class _SubwindowMin:
    """Exact sliding-window minimum over rotating subwindows.

    Keeps the raw values of the last num_subwindows completed
    subwindows plus the active one. The trailing-window minimum is
    assembled from the oldest subwindow's suffix minima (dropping the
    samples that have left the window), the newer subwindows' full
    minima and the active subwindow's running minimum, so the result
    equals a brute-force minimum over exactly the last
    subwindow_len * num_subwindows frames, every frame.
    """

    def __init__(self, subwindow_len: int, num_subwindows: int, num_bands: int):
        self.sub_len = subwindow_len
        self.num_subs = num_subwindows
        self.raw = np.empty((num_subwindows, subwindow_len, num_bands))
        self.sub_mins = np.empty((num_subwindows, num_bands))
        self.head = 0  # ring index of the oldest completed subwindow
        self.size = 0  # completed subwindows currently held
        self.active = np.empty((subwindow_len, num_bands))
        self.pos = 0
        self.current_min = np.full(num_bands, np.inf)
        self.oldest_suffix = None  # (sub_len, M) suffix minima of the oldest
        self.newer_min = None  # min over completed subwindows except the oldest

    def push(self, values: np.ndarray) -> None:
        self.active[self.pos] = values
        if self.pos == 0:
            self.current_min = values.copy()
        else:
            np.minimum(self.current_min, values, out=self.current_min)
        self.pos += 1
        if self.pos == self.sub_len:
            self._rotate()

    def _rotate(self) -> None:
        if self.size == self.num_subs:
            idx = self.head
            self.head = (self.head + 1) % self.num_subs
        else:
            idx = (self.head + self.size) % self.num_subs
            self.size += 1
        self.raw[idx] = self.active
        self.sub_mins[idx] = self.current_min
        self.pos = 0
        if self.size == self.num_subs:
            oldest = self.raw[self.head]
            self.oldest_suffix = np.minimum.accumulate(oldest[::-1], axis=0)[::-1]
            rest = [(self.head + i) % self.num_subs for i in range(1, self.num_subs)]
            if rest:
                self.newer_min = self.sub_mins[rest].min(axis=0)
            else:
                self.newer_min = np.full(self.raw.shape[-1], np.inf)

    def query(self) -> np.ndarray:
        if self.size < self.num_subs:
            # window not yet saturated: minimum over everything held
            result = self.current_min.copy() if self.pos else None
            if self.size:
                held = self.sub_mins[: self.size].min(axis=0)
                result = held if result is None else np.minimum(result, held)
            return result
        if self.pos == 0:
            return self.sub_mins.min(axis=0)
        result = np.minimum(self.oldest_suffix[self.pos], self.newer_min)
        return np.minimum(result, self.current_min, out=result)


@dataclass
class NoiseState:
    """Per-stream tracker state; single writer, movable between threads."""

    window_min: _SubwindowMin
    smoothed: np.ndarray
    presmoothed_mag: np.ndarray
    frame_count: int = 0

    @classmethod
    def for_params(cls, params: TrackerParams, num_bands: int) -> "NoiseState":
        return cls(
            window_min=_SubwindowMin(
                params.subwindow_len, params.num_subwindows, num_bands
            ),
            smoothed=np.zeros(num_bands),
            presmoothed_mag=np.zeros(num_bands),
        )

    @property
    def current_min(self) -> np.ndarray:
        return self.window_min.current_min

    @property
    def subwindow_mins(self) -> np.ndarray:
        return self.window_min.sub_mins[: self.window_min.size]


def track_raw(band_mags: np.ndarray, params: TrackerParams, state: NoiseState) -> np.ndarray:
    """Raw noise estimate: bias_factor times the sliding-window minimum.

    The window covers the last subwindow_len * num_subwindows frames
    (fewer while the stream is shorter than that); the first frame
    seeds the minimum with the first observation.
    """
    state.window_min.push(np.asarray(band_mags, dtype=float))
    return params.bias_factor * state.window_min.query()


def smooth_noise(raw: np.ndarray, state: NoiseState, alpha_eff) -> np.ndarray:
    """First-order smoothing of the raw track into the noise estimate.

    N(m) = N(m-1) + alpha * (N'(m) - N(m-1)); the first frame seeds
    N directly with the raw estimate so the floor never starts at zero.
    """
    if isinstance(alpha_eff, float):
        ok = 0.0 <= alpha_eff <= 1.0
    else:
        alpha_eff = np.asarray(alpha_eff, dtype=float)
        if alpha_eff.ndim == 0:
            ok = 0.0 <= float(alpha_eff) <= 1.0
        else:
            ok = alpha_eff.size == 0 or (
                float(alpha_eff.min()) >= 0.0 and float(alpha_eff.max()) <= 1.0
            )
    if not ok:
        raise UsageError(f"alpha_eff must lie in [0, 1], got {alpha_eff}")
    if state.frame_count == 0:
        state.smoothed = np.asarray(raw, dtype=float).copy()
    else:
        state.smoothed = state.smoothed + alpha_eff * (raw - state.smoothed)
    state.frame_count += 1
    return state.smoothed


def effective_alpha(base_alpha, stage1_snr_db: float, snr_map) -> np.ndarray:
    """Scale the base smoothing factor by the SNR-dependent multiplier.

    Lower frame SNR gives a multiplier >= 1 (faster tracking); the
    result is clamped to [0, 1]. With no map the base value is returned
    unchanged apart from the clamp.
    """
    base = np.asarray(base_alpha, dtype=float)
    if snr_map is None:
        return np.clip(base, 0.0, 1.0)
    xs, ys = _map_arrays(tuple(tuple(p) for p in snr_map))
    mult = float(np.interp(stage1_snr_db, xs, ys))
    if base.ndim == 0:
        return min(max(float(base) * mult, 0.0), 1.0)
    return np.clip(base * mult, 0.0, 1.0)


def update(
    band_mags: np.ndarray,
    params: TrackerParams,
    state: NoiseState,
    stage1_snr_db: float | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """One full tracker step: pre-smooth, window minimum, noise smoothing.

    Returns (raw estimate, smoothed estimate). stage1_snr_db feeds the
    alpha map when the params carry one; passing None leaves the base
    alpha in place.
    """
    mags = np.asarray(band_mags, dtype=float)
    if state.frame_count == 0:
        state.presmoothed_mag = mags.copy()
    else:
        state.presmoothed_mag = state.presmoothed_mag + params.mag_smooth_alpha * (
            mags - state.presmoothed_mag
        )
    raw = track_raw(state.presmoothed_mag, params, state)
    if params.alpha_snr_map is not None and stage1_snr_db is not None:
        alpha_eff = effective_alpha(params.alpha, stage1_snr_db, params.alpha_snr_map)
    else:
        # construction already validated alpha's range
        alpha_eff = params.alpha
    smoothed = smooth_noise(raw, state, alpha_eff)
    return raw, smoothed
