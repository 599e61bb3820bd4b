"""Dual-stage suppression pipeline.

One analysis and one synthesis per frame. Stage-1 tracks noise on the
analyzed spectrum's band magnitudes and applies its coarse gains to
the spectrum; Stage-2 pools the modified spectrum, speeds its noise
tracking up or down from Stage-1's frame SNR, and applies the fine
gains. The final per-frame bin gains (the product of both stages) are
logged so the measurement harness can replay them over the clean
components of a mix.
"""

from dataclasses import dataclass

import numpy as np

from . import bands, framing, gain, noise_tracking
from .config import PipelineConfig, StageConfig
from .errors import UsageError

# frame SNR reported for frames that carry no usable energy; high
# enough that the alpha map treats the frame as clean speech
_IDLE_FRAME_SNR_DB = 100.0


@dataclass
class FrameSnrSummary:
    """Energy-weighted mean of Stage-1 per-band SNR for one frame, dB."""

    snr_db: float


class _StageState:
    """Tracker plus gain state for one stage of one stream."""

    def __init__(self, stage_cfg: StageConfig, num_bands: int):
        self.cfg = stage_cfg
        self.noise = noise_tracking.NoiseState.for_params(stage_cfg.tracker, num_bands)
        self.gains = gain.GainState(num_bands)
        self.mu = np.asarray(stage_cfg.gains.mu, dtype=float)
        self.floor = np.asarray(stage_cfg.gains.gain_floor, dtype=float)

    def step(self, band_mags: np.ndarray, snr_feed_db: float | None):
        feed = snr_feed_db if self.cfg.uses_snr_feed else None
        raw_n, noise_est = noise_tracking.update(band_mags, self.cfg.tracker, self.noise, feed)
        snr = gain.compute_snr(band_mags, noise_est, self.cfg.gains.noise_floor_eps)
        raw_g = gain.compute_raw_gain(snr, self.mu, self.floor)
        smoothed = gain.smooth_gain(raw_g, self.gains, self.cfg.gains)
        return smoothed, snr, raw_n, noise_est


class StreamProcessor:
    """Streaming processor for one audio stream.

    Feed arbitrary blocks through process(); each call returns the
    output samples that became available, and concatenating the
    returns of chunked calls is bit-identical to one whole-signal
    call. The input buffer is pre-seeded with frame_len + hop_len
    zeros, so the output is the input delayed by exactly the
    algorithmic latency.

    Passing replay_log turns the processor into a gain player: the
    logged per-frame bin gains are applied instead of computing any,
    which is how the metrics module shadows mix components.
    """

    def __init__(
        self,
        cfg: PipelineConfig,
        *,
        single_stage: bool = False,
        replay_log: np.ndarray | None = None,
        log_gains: bool = True,
        tracker_sink=None,
    ):
        self.cfg = cfg
        fcfg = cfg.frame
        self.plan = bands.build_band_plan(fcfg.fft_len, fcfg.sample_rate_hz, cfg.num_bands)
        if fcfg.hpf_cutoff_hz is not None:
            self.hpf = framing.design_hpf(fcfg.hpf_cutoff_hz, fcfg.sample_rate_hz)
        else:
            self.hpf = None
        self.hpf_state = framing.HpfState()
        self.ola = framing.OlaState.for_config(fcfg)
        self.latency_samples = fcfg.frame_len + fcfg.hop_len
        # frames whose analysis buffer still holds seeded zeros
        self.warm_frames = fcfg.frame_len // fcfg.hop_len + 1
        self.carry = np.zeros(self.latency_samples)
        self.frame_index = 0
        self.replay_log = replay_log
        self.replay_pos = 0
        self.gain_log: list[np.ndarray] | None = [] if log_gains else None
        self.tracker_sink = tracker_sink
        if replay_log is None:
            self.stage1 = _StageState(cfg.stage1, cfg.num_bands)
            self.stage2 = None if single_stage else _StageState(cfg.stage2, cfg.num_bands)
        else:
            self.stage1 = None
            self.stage2 = None

    def process_frame(self, frame: np.ndarray):
        """Process one frame_len frame; returns (hop samples, summary).

        The summary is None in replay mode, where no SNR is computed.
        """
        fcfg = self.cfg.frame
        spec = framing.analyze(frame, fcfg)
        summary = None
        if self.replay_log is not None:
            if self.replay_pos >= len(self.replay_log):
                raise UsageError(
                    f"gain log exhausted after {self.replay_pos} frames; "
                    f"stream and log do not match"
                )
            bin_gains = self.replay_log[self.replay_pos]
            if np.shape(bin_gains) != spec.bins.shape:
                raise UsageError(
                    f"gain log rows have shape {np.shape(bin_gains)}, "
                    f"expected {spec.bins.shape}"
                )
            self.replay_pos += 1
            spec = bands.apply_gains(spec, bin_gains)
        elif self.frame_index < self.warm_frames:
            bin_gains = np.ones(fcfg.num_bins)
            summary = FrameSnrSummary(snr_db=_IDLE_FRAME_SNR_DB)
        else:
            mags1 = bands.pool_to_bands(spec, self.plan)
            g1, snr1, raw_n1, n1 = self.stage1.step(mags1, None)
            summary = self._summarize(snr1, mags1)
            bin_gains = bands.expand_to_bins(g1, self.plan)
            spec = bands.apply_gains(spec, bin_gains)
            if self.tracker_sink is not None:
                self.tracker_sink(self.frame_index, 1, raw_n1, n1)
            if self.stage2 is not None:
                mags2 = bands.pool_to_bands(spec, self.plan)
                g2, snr2, raw_n2, n2 = self.stage2.step(mags2, summary.snr_db)
                bin_g2 = bands.expand_to_bins(g2, self.plan)
                spec = bands.apply_gains(spec, bin_g2)
                bin_gains = bin_gains * bin_g2
                if self.tracker_sink is not None:
                    self.tracker_sink(self.frame_index, 2, raw_n2, n2)
        if self.gain_log is not None:
            self.gain_log.append(bin_gains)
        self.frame_index += 1
        return framing.synthesize(spec, self.ola, fcfg), summary

    def _summarize(self, snr: np.ndarray, band_mags: np.ndarray) -> FrameSnrSummary:
        # weights are band energies; a silent frame has no SNR evidence
        weights = band_mags * band_mags * self.plan.widths
        total = weights.sum()
        if total <= 0.0:
            return FrameSnrSummary(snr_db=_IDLE_FRAME_SNR_DB)
        snr_lin = float(np.dot(weights, snr) / total)
        if snr_lin <= 0.0:
            return FrameSnrSummary(snr_db=_IDLE_FRAME_SNR_DB)
        return FrameSnrSummary(snr_db=10.0 * np.log10(snr_lin))

    def process(self, samples: np.ndarray) -> np.ndarray:
        """Feed a block; return whatever output samples are now complete."""
        x = np.asarray(samples, dtype=float)
        if x.ndim != 1:
            raise UsageError(f"expected a mono 1-D signal, got shape {x.shape}")
        if x.size and self.hpf is not None:
            x = framing.hpf_process(x, self.hpf, self.hpf_state)
        fcfg = self.cfg.frame
        buf = np.concatenate([self.carry, x]) if x.size else self.carry
        blocks = []
        pos = 0
        while buf.size - pos >= fcfg.frame_len:
            out, _ = self.process_frame(buf[pos : pos + fcfg.frame_len])
            blocks.append(out)
            pos += fcfg.hop_len
        self.carry = buf[pos:].copy()
        if not blocks:
            return np.zeros(0)
        return np.concatenate(blocks)


def _run_stream(proc: StreamProcessor, x: np.ndarray, out_len: int) -> np.ndarray:
    fcfg = proc.cfg.frame
    flush = np.zeros(proc.latency_samples + fcfg.frame_len)
    y = np.concatenate([proc.process(x), proc.process(flush)])
    if y.size < out_len:
        y = np.concatenate([y, np.zeros(out_len - y.size)])
    return y[:out_len]


def _stack_log(proc: StreamProcessor, cfg: PipelineConfig) -> np.ndarray:
    if not proc.gain_log:
        return np.zeros((0, cfg.frame.num_bins))
    return np.stack(proc.gain_log)


def process_stream(
    samples,
    cfg: PipelineConfig,
    *,
    single_stage: bool = False,
    latency_aligned: bool = False,
    tracker_sink=None,
) -> tuple[np.ndarray, np.ndarray]:
    """Run the dual-stage pipeline over a whole signal.

    Returns (enhanced signal, per-frame bin-gain log). The output has
    the input's length; the algorithmic latency appears as a leading
    delay and the tail is flushed with zeros. With latency_aligned the
    leading delay is trimmed instead, so output sample i corresponds
    to input sample i.
    """
    x = np.asarray(samples, dtype=float)
    if x.ndim != 1:
        raise UsageError(f"expected a mono 1-D signal, got shape {x.shape}")
    if x.size == 0:
        return np.zeros(0), np.zeros((0, cfg.frame.num_bins))
    proc = StreamProcessor(cfg, single_stage=single_stage, tracker_sink=tracker_sink)
    if latency_aligned:
        y = _run_stream(proc, x, x.size + proc.latency_samples)[proc.latency_samples :]
    else:
        y = _run_stream(proc, x, x.size)
    return y, _stack_log(proc, cfg)


def single_stage_process(samples, cfg: PipelineConfig, **kwargs):
    """process_stream with Stage-2 disabled, for A/B comparison."""
    return process_stream(samples, cfg, single_stage=True, **kwargs)


def replay_gains(samples, gain_log: np.ndarray, cfg: PipelineConfig) -> np.ndarray:
    """Re-run the framing path applying a logged gain sequence.

    The signal goes through the same high-pass, framing and synthesis
    as the run that produced the log, but the logged bin gains are
    applied verbatim. The log must have exactly as many frames as the
    stream produces, otherwise a UsageError is raised.
    """
    x = np.asarray(samples, dtype=float)
    if x.ndim != 1:
        raise UsageError(f"expected a mono 1-D signal, got shape {x.shape}")
    gain_log = np.asarray(gain_log, dtype=float)
    if x.size == 0:
        if len(gain_log):
            raise UsageError(f"gain log has {len(gain_log)} frames, empty stream has none")
        return np.zeros(0)
    proc = StreamProcessor(cfg, replay_log=gain_log, log_gains=False)
    y = _run_stream(proc, x, x.size)
    if proc.replay_pos != len(gain_log):
        raise UsageError(
            f"gain log has {len(gain_log)} frames, stream produced {proc.replay_pos}"
        )
    return y
