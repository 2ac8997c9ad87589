"""Core spectral data types and operations.

A :class:`Spectrum` is the universal currency of the toolkit: intensity
values on a strictly increasing wavelength grid plus acquisition metadata.
This module provides reflectance calibration against white/dark references,
piecewise-linear resampling, dual-instrument stitching with a linear
cross-fade, and photodetector saturation detection.

All operations are pure: inputs are never mutated and value arrays are
stored read-only.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Literal

import numpy as np
from numpy.typing import NDArray

from .errors import NumericalError, ValidationError

SpectrumKind = Literal["raw", "dark", "white", "calibrated", "loss"]

WAVELENGTH_MIN_NM = 300.0
WAVELENGTH_MAX_NM = 2000.0

#: Calibrated values above this are retained but flagged as over-range.
OVER_RANGE_LIMIT = 1.0 + 1e-9

_KINDS = ("raw", "dark", "white", "calibrated", "loss")
_COUNT_KINDS = ("raw", "dark", "white")


def _frozen_array(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class WavelengthGrid:
    """Strictly increasing wavelength axis in nanometers.

    Grids are explicit arrays rather than start/step pairs because the two
    spectrometer channels of a typical rig have unequal pixel pitches.
    """

    wavelengths: NDArray[np.float64]

    def __post_init__(self) -> None:
        wl = _frozen_array(self.wavelengths)
        object.__setattr__(self, "wavelengths", wl)
        if wl.ndim != 1 or wl.size < 2:
            raise ValidationError("wavelength grid must be 1-D with at least 2 values")
        if not np.all(np.isfinite(wl)):
            raise ValidationError("wavelengths must be finite")
        if np.any(np.diff(wl) <= 0):
            raise ValidationError("wavelengths must be strictly increasing")
        if wl[0] < WAVELENGTH_MIN_NM or wl[-1] > WAVELENGTH_MAX_NM:
            raise ValidationError(
                f"wavelengths must lie within [{WAVELENGTH_MIN_NM:.0f}, "
                f"{WAVELENGTH_MAX_NM:.0f}] nm, got "
                f"[{wl[0]:.2f}, {wl[-1]:.2f}]"
            )

    def __len__(self) -> int:
        return int(self.wavelengths.size)

    @property
    def lo(self) -> float:
        return float(self.wavelengths[0])

    @property
    def hi(self) -> float:
        return float(self.wavelengths[-1])

    def matches(self, other: "WavelengthGrid") -> bool:
        """True when both grids hold identical wavelength values."""
        return self is other or np.array_equal(self.wavelengths, other.wavelengths)

    def index_nearest(self, nm: float) -> int:
        """Index of the channel closest to ``nm``.

        Raises:
            ValidationError: if ``nm`` lies outside the grid range.
        """
        wl = self.wavelengths
        if nm < wl[0] or nm > wl[-1]:
            raise ValidationError(
                f"{nm:.2f} nm lies outside the grid range [{wl[0]:.2f}, {wl[-1]:.2f}]"
            )
        return int(np.argmin(np.abs(wl - nm)))

    def select_band(self, lo_nm: float, hi_nm: float) -> np.ndarray:
        """Boolean channel selector for wavelengths within [lo_nm, hi_nm]."""
        wl = self.wavelengths
        return (wl >= lo_nm) & (wl <= hi_nm)


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Per-channel intensity values on a wavelength grid.

    Attributes:
        grid: Wavelength axis shared by the values.
        values: One value per channel. Digital counts for raw/dark/white,
            dimensionless for calibrated, dB for loss spectra.
        kind: What stage of the signal chain the values represent.
        integration_time_ms: Detector integration time, > 0.
        channel_id: Opaque source label (instrument / finger / fiber port).
        timestamp: Optional monotonic acquisition time in seconds.
        mask: Per-channel flag, True where the value is unreliable
            (saturated, low calibration signal, over-range). Flagged values
            are kept, not replaced by sentinels.
    """

    grid: WavelengthGrid
    values: NDArray[np.float64]
    kind: SpectrumKind = "raw"
    integration_time_ms: float = 1.0
    channel_id: str = "unknown"
    timestamp: float | None = None
    mask: NDArray[np.bool_] | None = None

    def __post_init__(self) -> None:
        values = _frozen_array(self.values)
        object.__setattr__(self, "values", values)
        if self.kind not in _KINDS:
            raise ValidationError(f"unknown spectrum kind: {self.kind!r}")
        if values.ndim != 1 or values.size != len(self.grid):
            raise ValidationError(
                f"values length {values.size} does not match grid length {len(self.grid)}"
            )
        if not np.all(np.isfinite(values)):
            raise ValidationError("spectrum values must be finite")
        if self.kind in _COUNT_KINDS and np.any(values < 0):
            raise ValidationError(f"{self.kind} spectra must be non-negative")
        if not self.integration_time_ms > 0:
            raise ValidationError("integration_time_ms must be > 0")
        mask = self.mask
        if mask is None:
            mask = np.zeros(values.size, dtype=bool)
        mask = _frozen_array(mask, dtype=bool)
        if mask.shape != values.shape:
            raise ValidationError("mask shape must match values")
        object.__setattr__(self, "mask", mask)

    def __len__(self) -> int:
        return int(self.values.size)

    @property
    def valid(self) -> np.ndarray:
        """Boolean array, True on channels that are not flagged."""
        return ~self.mask

    def replace(self, **changes) -> "Spectrum":
        """Copy with the given fields swapped out (validation re-runs)."""
        return dataclasses.replace(self, **changes)

    def select_band(self, lo_nm: float, hi_nm: float) -> "Spectrum":
        """Restrict to channels within [lo_nm, hi_nm] nm."""
        keep = self.grid.select_band(lo_nm, hi_nm)
        if keep.sum() < 2:
            raise ValidationError(
                f"band [{lo_nm:.1f}, {hi_nm:.1f}] nm selects fewer than 2 channels"
            )
        return Spectrum(
            grid=WavelengthGrid(self.grid.wavelengths[keep]),
            values=self.values[keep],
            kind=self.kind,
            integration_time_ms=self.integration_time_ms,
            channel_id=self.channel_id,
            timestamp=self.timestamp,
            mask=self.mask[keep],
        )

    def mean_intensity(self, band: tuple[float, float] | None = None) -> float:
        """Mean value over unmasked channels, optionally band-limited."""
        keep = self.valid
        if band is not None:
            keep = keep & self.grid.select_band(*band)
        if not keep.any():
            raise NumericalError("no unmasked channels to average")
        return float(self.values[keep].mean())


@dataclass(frozen=True, eq=False)
class CalibrationPair:
    """White/dark reference spectra enabling reflectance normalization.

    Channels whose white-minus-dark span falls below ``epsilon`` are
    recorded in :attr:`low_signal_mask`; calibration flags them instead of
    dividing by a near-zero span.

    Attributes:
        white: Reference off a calibrated diffuse white standard.
        dark: Reference with the light source off and the path covered.
        epsilon: Denominator floor in counts. Defaults to 1e-6 of the
            white reference's maximum.
    """

    white: Spectrum
    dark: Spectrum
    epsilon: float | None = None
    low_signal_mask: NDArray[np.bool_] = dataclasses.field(init=False)

    def __post_init__(self) -> None:
        if self.white.kind != "white":
            raise ValidationError(f"white reference has kind {self.white.kind!r}")
        if self.dark.kind != "dark":
            raise ValidationError(f"dark reference has kind {self.dark.kind!r}")
        if not self.white.grid.matches(self.dark.grid):
            raise ValidationError("white and dark references must share one grid")
        if self.white.integration_time_ms != self.dark.integration_time_ms:
            raise ValidationError("white and dark references must share integration time")
        span = self.white.values - self.dark.values
        if np.mean(span > 0) < 0.95:
            raise ValidationError(
                "white must exceed dark on at least 95% of channels; "
                f"only {100 * np.mean(span > 0):.1f}% do"
            )
        eps = self.epsilon
        if eps is None:
            eps = 1e-6 * float(self.white.values.max())
        if not eps > 0:
            raise ValidationError("epsilon must be > 0")
        object.__setattr__(self, "epsilon", float(eps))
        object.__setattr__(self, "low_signal_mask", _frozen_array(span < eps, dtype=bool))

    @property
    def grid(self) -> WavelengthGrid:
        return self.white.grid


def calibrate_reflectance(raw: Spectrum, pair: CalibrationPair) -> Spectrum:
    """Normalize raw counts to reflectance against a white/dark pair.

    Per channel the output is ``(raw - dark) / (white - dark)``. Channels
    in the pair's low-signal mask are emitted as 0.0 and flagged rather
    than producing infinities; values above 1 are retained and flagged as
    over-range (ambient light can legitimately push channels past the
    white reference). The raw spectrum's own flags propagate.

    Args:
        raw: Measurement in digital counts, kind ``raw``.
        pair: White/dark references on the same grid.

    Returns:
        A spectrum of kind ``calibrated``.

    Raises:
        ValidationError: on grid mismatch or wrong input kind.
    """
    if raw.kind != "raw":
        raise ValidationError(f"expected a raw spectrum, got kind {raw.kind!r}")
    if not raw.grid.matches(pair.grid):
        raise ValidationError("raw spectrum and calibration pair use different grids")
    span = pair.white.values - pair.dark.values
    low = pair.low_signal_mask
    safe_span = np.where(low, 1.0, span)
    values = np.where(low, 0.0, (raw.values - pair.dark.values) / safe_span)
    mask = low | raw.mask | (values > OVER_RANGE_LIMIT)
    return Spectrum(
        grid=raw.grid,
        values=values,
        kind="calibrated",
        integration_time_ms=raw.integration_time_ms,
        channel_id=raw.channel_id,
        timestamp=raw.timestamp,
        mask=mask,
    )


def _interp_mask(
    target: np.ndarray, source: np.ndarray, mask: np.ndarray
) -> np.ndarray:
    """Propagate flags: a target channel is flagged when either source
    channel bracketing it is flagged (exact hits depend on one channel)."""
    if not mask.any():
        return np.zeros(target.size, dtype=bool)
    n = source.size
    left = np.clip(np.searchsorted(source, target, side="right") - 1, 0, n - 1)
    right = np.clip(np.searchsorted(source, target, side="left"), 0, n - 1)
    return mask[left] | mask[right]


def resample(s: Spectrum, target: WavelengthGrid) -> Spectrum:
    """Piecewise-linear interpolation of a spectrum onto a new grid.

    No extrapolation: the target range must lie within the source range.
    Kind and metadata are preserved; flags propagate to any target channel
    whose bracketing source channels include a flagged one.

    Raises:
        ValidationError: if the target extends beyond the source range.
    """
    src = s.grid.wavelengths
    tgt = target.wavelengths
    if tgt[0] < src[0] or tgt[-1] > src[-1]:
        raise ValidationError(
            f"target range [{tgt[0]:.2f}, {tgt[-1]:.2f}] nm extends beyond "
            f"source range [{src[0]:.2f}, {src[-1]:.2f}] nm (no extrapolation)"
        )
    values = np.interp(tgt, src, s.values)
    return Spectrum(
        grid=target,
        values=values,
        kind=s.kind,
        integration_time_ms=s.integration_time_ms,
        channel_id=s.channel_id,
        timestamp=s.timestamp,
        mask=_interp_mask(tgt, src, s.mask),
    )


def stitch(
    vnir: Spectrum,
    nir: Spectrum,
    crossover_nm: float = 950.0,
    overlap_nm: float = 100.0,
) -> Spectrum:
    """Merge calibrated spectra from the VNIR and NIR instruments.

    Below the cross-fade window the output carries the VNIR channels
    verbatim, above it the NIR channels; inside the window (centered on
    ``crossover_nm``, ``overlap_nm`` wide, clipped to the region covered by
    both grids) both spectra are interpolated onto the union of their grid
    points and blended with a linear ramp. ``overlap_nm=0`` degenerates to
    a hard step at the crossover.

    Raises:
        ValidationError: when either input is not calibrated, the grids do
            not overlap, or the crossover lies outside the overlap region.
    """
    if vnir.kind != "calibrated" or nir.kind != "calibrated":
        raise ValidationError(
            f"stitch expects calibrated spectra, got {vnir.kind!r} and {nir.kind!r}"
        )
    if overlap_nm < 0:
        raise ValidationError("overlap_nm must be >= 0")
    v_wl = vnir.grid.wavelengths
    n_wl = nir.grid.wavelengths
    if n_wl[0] > v_wl[-1]:
        raise ValidationError(
            f"grids do not overlap: VNIR ends at {v_wl[-1]:.2f} nm, "
            f"NIR starts at {n_wl[0]:.2f} nm"
        )
    if not (n_wl[0] <= crossover_nm <= v_wl[-1]):
        raise ValidationError(
            f"crossover {crossover_nm:.2f} nm lies outside the overlap "
            f"region [{n_wl[0]:.2f}, {v_wl[-1]:.2f}] nm"
        )
    win_lo = max(crossover_nm - overlap_nm / 2, n_wl[0], v_wl[0])
    win_hi = min(crossover_nm + overlap_nm / 2, v_wl[-1], n_wl[-1])
    if win_hi <= win_lo:
        win_lo = win_hi = crossover_nm

    low_sel = v_wl < win_lo
    high_sel = n_wl > win_hi
    mid = np.unique(
        np.concatenate(
            [
                v_wl[(v_wl >= win_lo) & (v_wl <= win_hi)],
                n_wl[(n_wl >= win_lo) & (n_wl <= win_hi)],
            ]
        )
    )
    if win_hi > win_lo:
        weight = (mid - win_lo) / (win_hi - win_lo)
    else:
        weight = np.ones(mid.size)  # degenerate window: NIR wins at the step
    v_mid = np.interp(mid, v_wl, vnir.values)
    n_mid = np.interp(mid, n_wl, nir.values)
    blended = (1.0 - weight) * v_mid + weight * n_mid
    mid_mask = _interp_mask(mid, v_wl, vnir.mask) | _interp_mask(mid, n_wl, nir.mask)

    out_wl = np.concatenate([v_wl[low_sel], mid, n_wl[high_sel]])
    out_values = np.concatenate([vnir.values[low_sel], blended, nir.values[high_sel]])
    out_mask = np.concatenate([vnir.mask[low_sel], mid_mask, nir.mask[high_sel]])
    return Spectrum(
        grid=WavelengthGrid(out_wl),
        values=out_values,
        kind="calibrated",
        integration_time_ms=max(vnir.integration_time_ms, nir.integration_time_ms),
        channel_id=f"stitch({vnir.channel_id},{nir.channel_id})",
        timestamp=vnir.timestamp,
        mask=out_mask,
    )


def detect_saturation(s: Spectrum, ceiling: float) -> np.ndarray:
    """Boolean mask, True where raw counts reach the photodetector ceiling.

    Raises:
        ValidationError: if the spectrum is not of kind ``raw``.
    """
    if s.kind != "raw":
        raise ValidationError(f"saturation is defined on raw counts, got {s.kind!r}")
    return s.values >= ceiling
