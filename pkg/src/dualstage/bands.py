"""Psychoacoustic bin-to-band partition and spectral filtering.

Bins of the half spectrum are grouped into M critical bands on the
Bark scale. Suppression is computed per band and converted back to
per-bin gains by interpolation, which is applied to the complex
spectrum with the original phase kept.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .framing import SpectralFrame


def bark_of_hz(freq_hz):
    """Bark(f) = 13*atan(0.00076*f) + 3.5*atan((f/7500)^2)."""
    f = np.asarray(freq_hz, dtype=float)
    return 13.0 * np.arctan(0.00076 * f) + 3.5 * np.arctan((f / 7500.0) ** 2)


@dataclass(frozen=True, eq=False)
class BandPlan:
    """Immutable bin-to-band partition table.

    edges has num_bands + 1 ascending bin indices with edges[0] = 0 and
    edges[-1] = fft_len/2 + 1; band j covers bins edges[j]..edges[j+1]-1.
    center_bins holds the (possibly half-integer) midpoint bin of each
    band, centers_hz the same in Hz.
    """

    num_bands: int
    edges: np.ndarray
    center_bins: np.ndarray
    centers_hz: np.ndarray
    widths: np.ndarray
    fft_len: int
    sample_rate_hz: int


def build_band_plan(fft_len: int, sample_rate_hz: int, num_bands: int) -> BandPlan:
    """Partition bins 0..fft_len/2 into num_bands Bark-spaced bands.

    The total Bark range of the bin centers is split into num_bands
    equal intervals; each interior edge is placed at the first bin
    whose Bark value crosses its interval boundary. A forward pass then
    shifts edges so every band keeps at least one bin, and a backward
    pass clamps them against the fixed top edge, so the result is a
    full disjoint cover of the half spectrum.
    """
    nbins = fft_len // 2 + 1
    if num_bands < 1:
        raise ConfigError(f"num_bands must be at least 1, got {num_bands}")
    if num_bands > nbins:
        raise ConfigError(
            f"num_bands must not exceed the {nbins} available bins, got {num_bands}"
        )
    freqs = np.arange(nbins) * sample_rate_hz / fft_len
    z = bark_of_hz(freqs)
    bounds = z[0] + (z[-1] - z[0]) * np.arange(num_bands + 1) / num_bands

    edges = np.empty(num_bands + 1, dtype=np.int64)
    edges[0] = 0
    edges[-1] = nbins
    edges[1:-1] = np.searchsorted(z, bounds[1:-1])
    for j in range(1, num_bands + 1):
        if edges[j] <= edges[j - 1]:
            edges[j] = edges[j - 1] + 1
    for j in range(num_bands - 1, 0, -1):
        if edges[j] >= edges[j + 1]:
            edges[j] = edges[j + 1] - 1

    center_bins = (edges[:-1] + edges[1:] - 1) / 2.0
    centers_hz = center_bins * sample_rate_hz / fft_len
    widths = np.diff(edges)
    for arr in (edges, center_bins, centers_hz, widths):
        arr.flags.writeable = False
    return BandPlan(
        num_bands=num_bands,
        edges=edges,
        center_bins=center_bins,
        centers_hz=centers_hz,
        widths=widths,
        fft_len=fft_len,
        sample_rate_hz=sample_rate_hz,
    )


def pool_to_bands(spec: SpectralFrame, plan: BandPlan) -> np.ndarray:
    """Pool per-bin power into band magnitudes.

    Band magnitude is the RMS of the bin magnitudes, i.e. the square
    root of the mean per-bin power, which keeps the downstream SNR
    independent of band width.
    """
    sums = np.add.reduceat(spec.power, plan.edges[:-1])
    return np.sqrt(sums / plan.widths)


def expand_to_bins(band_gains: np.ndarray, plan: BandPlan) -> np.ndarray:
    """Convert M band gains to fft_len/2 + 1 bin gains.

    Linear interpolation across the band center bins; bins outside the
    first and last centers take the edge band's gain unchanged.
    """
    nbins = plan.edges[-1]
    return np.interp(np.arange(nbins), plan.center_bins, band_gains)


def apply_gains(spec: SpectralFrame, bin_gains: np.ndarray) -> SpectralFrame:
    """Scale each complex bin by its real gain, keeping the phase."""
    bins = spec.bins * bin_gains
    # real gains leave phase alone, so the power scales by the square
    power = spec.power * bin_gains * bin_gains
    return SpectralFrame(bins=bins, power=power)
