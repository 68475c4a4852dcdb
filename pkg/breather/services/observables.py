"""
Quantities extracted from simulation output: breathing period and envelope of
the max-density trace, temporal and spatial widths, center-of-mass track and
peak-by-peak delays between two runs.
"""

from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.signal import find_peaks

from breather.schemas.field_schema import TimeSeries, WaveField
from breather.schemas.report_schema import BreathingReport, PeakDelay
from breather.services.field_core import moments
from breather.services.modulation import ModulationPlan
from breather.utils.errors import AlignmentError, InsufficientDataError

PROMINENCE_FRACTION = 0.25
MIN_PEAKS = 3

TRACE_COLUMNS = ["t", "max_density", "norm", "com", "rms_width", "fwhm_space"]
FIELD_COLUMNS = ["t", "x", "re", "im", "density"]


# =============================================================================
# PEAK DETECTION
# =============================================================================

def _parabola_vertex(t: np.ndarray, v: np.ndarray, i: int) -> Tuple[float, float]:
    """Vertex of the parabola through samples i-1, i, i+1."""
    t0 = t[i]
    c2, c1, c0 = np.polyfit(t[i - 1:i + 2] - t0, v[i - 1:i + 2], 2)
    if c2 == 0:
        return float(t0), float(v[i])
    shift = -c1 / (2.0 * c2)
    # keep the vertex inside the bracketing samples
    shift = float(np.clip(shift, t[i - 1] - t0, t[i + 1] - t0))
    return t0 + shift, float(c0 + c1 * shift + c2 * shift ** 2)


def refined_extrema(series: TimeSeries, maxima: bool = True,
                    prominence_fraction: float = PROMINENCE_FRACTION) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Interior local extrema with prominence above `prominence_fraction` of the
    series range, refined by 3-point quadratic interpolation. A peak whose
    descent is cut off by the end of the series has its prominence measured
    against that last sample, so it is usually dropped.

    Returns (sample_indices, refined_times, refined_values).
    """
    t, v = series.times, series.values
    span = float(np.ptp(v)) if v.size else 0.0
    if v.size < 3 or span == 0.0:
        empty = np.array([], dtype=np.float64)
        return np.array([], dtype=int), empty, empty

    signal = v if maxima else -v
    indices, _ = find_peaks(signal, prominence=prominence_fraction * span)
    refined = [_parabola_vertex(t, v, int(i)) for i in indices]
    times = np.array([r[0] for r in refined], dtype=np.float64)
    values = np.array([r[1] for r in refined], dtype=np.float64)
    return indices, times, values


def _crossing(t: np.ndarray, v: np.ndarray, start: int, level: float, step: int) -> Optional[float]:
    """Time where v drops below `level` walking from `start` in direction `step`."""
    k = start
    while 0 <= k + step < v.size:
        nxt = k + step
        if v[nxt] < level:
            frac = (v[k] - level) / (v[k] - v[nxt])
            return float(t[k] + frac * (t[nxt] - t[k]))
        k = nxt
    return None


def _width_at(t: np.ndarray, v: np.ndarray, index: int, level: float) -> Optional[float]:
    left = _crossing(t, v, index, level, -1)
    right = _crossing(t, v, index, level, +1)
    if left is None or right is None:
        return None
    return right - left


# =============================================================================
# BREATHING METRICS
# =============================================================================

def breathing_metrics(series: TimeSeries, fwhm_space: Optional[TimeSeries] = None) -> BreathingReport:
    """
    Period, envelope and width of a max-density trace.

    Peaks and troughs are refined by quadratic interpolation; period is the
    mean refined inter-peak spacing; amplitude_max/min are mean refined peak
    and trough heights; fwhm_time is the mean width of each fully resolved
    peak at amplitude_min + (amplitude_max - amplitude_min) / 2. When a
    spatial-width series is given, fwhm_space is its mean at the peak times.

    Raises:
        InsufficientDataError: fewer than 3 peaks, no trough, or no resolvable width
    """
    peak_idx, peak_times, peak_heights = refined_extrema(series, maxima=True)
    if peak_times.size < MIN_PEAKS:
        raise InsufficientDataError(
            f"'{series.name}' has {peak_times.size} breathing peaks over "
            f"[{series.times[0]:.4g}, {series.times[-1]:.4g}], need at least {MIN_PEAKS}"
        )
    _, _, trough_values = refined_extrema(series, maxima=False)
    if trough_values.size == 0:
        raise InsufficientDataError(f"'{series.name}' has no interior trough")

    spacings = np.diff(peak_times)
    period = float(np.mean(spacings))
    amplitude_max = float(np.mean(peak_heights))
    amplitude_min = float(np.mean(trough_values))

    level = amplitude_min + 0.5 * (amplitude_max - amplitude_min)
    widths = [w for w in (_width_at(series.times, series.values, int(i), level) for i in peak_idx) if w is not None]
    if not widths:
        raise InsufficientDataError(f"no peak of '{series.name}' is resolved down to the half level {level:.4g}")

    space = None
    if fwhm_space is not None and len(fwhm_space) > 0:
        space = float(np.mean(np.interp(peak_times, fwhm_space.times, fwhm_space.values)))

    return BreathingReport(
        period=period,
        period_std=float(np.std(spacings)),
        frequency=1.0 / period,
        amplitude_min=amplitude_min,
        amplitude_max=amplitude_max,
        peak_max=float(np.max(peak_heights)),
        trough_min=float(np.min(trough_values)),
        fwhm_time=float(np.mean(widths)),
        fwhm_space=space,
        peak_times=peak_times.tolist(),
        peak_heights=peak_heights.tolist(),
    )


def spatial_fwhm(field: WaveField) -> float:
    """Full width of |psi|^2 at half of its maximum, by linear interpolation of the crossings."""
    density = field.density
    index = int(np.argmax(density))
    width = _width_at(field.grid.x, density, index, 0.5 * float(density[index]))
    return float("nan") if width is None else width


def refined_max_density(field: WaveField) -> float:
    density = field.density
    index = int(np.argmax(density))
    if 0 < index < density.size - 1:
        return _parabola_vertex(field.grid.x, density, index)[1]
    return float(density[index])


# =============================================================================
# CENTER OF MASS
# =============================================================================

def com_track(snapshots: Sequence[Tuple[float, WaveField]]) -> TimeSeries:
    times = [t for t, _ in snapshots]
    com = [moments(field).center_of_mass for _, field in snapshots]
    return TimeSeries(times=times, values=com, name="com")


def com_deviation(track: TimeSeries, plan: ModulationPlan) -> float:
    """max_t |com(t) + b(t) / a(t)|."""
    k = plan.evaluate(track.times)
    return float(np.max(np.abs(track.values + k.b / k.a)))


def recurrence_deviation(series: TimeSeries, lag: float) -> float:
    """max |s(t + lag) - s(t)| over the part of the series where t + lag is covered."""
    t, v = series.times, series.values
    inside = t + lag <= t[-1]
    if lag <= 0 or np.count_nonzero(inside) < 2:
        raise InsufficientDataError(
            f"lag {lag:.4g} leaves no overlap in '{series.name}' spanning {t[-1] - t[0]:.4g}"
        )
    return float(np.max(np.abs(np.interp(t[inside] + lag, t, v) - v[inside])))


# =============================================================================
# PEAK DELAY
# =============================================================================

def peak_delay(reference: TimeSeries, candidate: TimeSeries, max_peaks: Optional[int] = None) -> List[PeakDelay]:
    """
    delay_i = candidate_peak_i - reference_peak_i on quadratic-refined peaks.

    Raises:
        AlignmentError: peak counts differ (after truncation to `max_peaks`) or there are none
    """
    _, ref_times, _ = refined_extrema(reference)
    _, cand_times, _ = refined_extrema(candidate)
    if max_peaks is not None:
        ref_times, cand_times = ref_times[:max_peaks], cand_times[:max_peaks]
    if ref_times.size != cand_times.size or ref_times.size == 0:
        raise AlignmentError(
            f"cannot align peaks: reference has {ref_times.size}, candidate has {cand_times.size}"
        )
    return [PeakDelay(peak_index=i, delay=float(d)) for i, d in enumerate(cand_times - ref_times)]


# =============================================================================
# RECORDERS
# =============================================================================

class TraceRecorder:
    """Propagation observer collecting one trace row per snapshot."""

    def __init__(self, with_width: bool = True):
        self.with_width = with_width
        self.rows = []

    def __call__(self, t: float, field: WaveField):
        m = moments(field)
        self.rows.append({
            "t": float(t),
            "max_density": refined_max_density(field),
            "norm": m.norm,
            "com": m.center_of_mass,
            "rms_width": m.rms_width,
            "fwhm_space": spatial_fwhm(field) if self.with_width else float("nan"),
        })

    def frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows, columns=TRACE_COLUMNS)

    def series(self, column: str = "max_density") -> TimeSeries:
        return trace_series(self.frame(), column)


class FieldRecorder:
    """Keeps every `every`-th snapshot it sees, as full-field rows."""

    def __init__(self, every: int = 1):
        self.every = max(int(every), 1)
        self._seen = 0
        self.frames = []

    def __call__(self, t: float, field: WaveField):
        if self._seen % self.every == 0:
            psi = field.amplitudes
            self.frames.append(pd.DataFrame({
                "t": np.full(psi.size, float(t)),
                "x": field.grid.x,
                "re": psi.real,
                "im": psi.imag,
                "density": field.density,
            }))
        self._seen += 1

    def frame(self) -> pd.DataFrame:
        if not self.frames:
            return pd.DataFrame(columns=FIELD_COLUMNS)
        return pd.concat(self.frames, ignore_index=True)


def trace_series(trace: pd.DataFrame, column: str = "max_density") -> TimeSeries:
    """One column of a trace frame against its `t` column."""
    return TimeSeries(times=trace["t"].to_numpy(), values=trace[column].to_numpy(), name=column)
