"""Spectrum containers, peak extraction, and cross-method comparison."""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import signal


@dataclass
class SpectrumSeries:
    """Sampled emission spectrum N(omega) with provenance metadata."""

    omega: np.ndarray
    value: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.omega = np.asarray(self.omega, dtype=float)
        self.value = np.asarray(self.value, dtype=float)
        if self.omega.shape != self.value.shape or self.omega.ndim != 1:
            raise ValueError("omega and value must be 1-d arrays of equal length")
        if self.omega.size and np.any(np.diff(self.omega) <= 0):
            raise ValueError("omega grid must be strictly increasing")
        if self.value.size and np.min(self.value) < -1e-12:
            raise ValueError(f"negative spectral values: min = {np.min(self.value)}")

    def normalized(self) -> "SpectrumSeries":
        """Rescale to unit maximum (no-op for an all-zero series)."""
        peak = np.max(self.value) if self.value.size else 0.0
        v = self.value / peak if peak > 0 else self.value.copy()
        return SpectrumSeries(self.omega.copy(), v, dict(self.meta))

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("omega,value\n")
        for w, v in zip(self.omega, self.value):
            buf.write("%.17g,%.17g\n" % (w, v))
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, meta: Optional[dict] = None) -> "SpectrumSeries":
        rows = [ln for ln in text.strip().splitlines() if ln and not ln.startswith("omega")]
        data = np.array([[float(x) for x in ln.split(",")] for ln in rows])
        return cls(data[:, 0], data[:, 1], meta or {})


@dataclass(frozen=True)
class Peak:
    position: float
    height: float
    fwhm: float


@dataclass
class PeakSet:
    peaks: list

    def __len__(self):
        return len(self.peaks)

    def __iter__(self):
        return iter(self.peaks)

    @property
    def positions(self) -> np.ndarray:
        return np.array([p.position for p in self.peaks])

    def dominant(self) -> Peak:
        return max(self.peaks, key=lambda p: p.height)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("position,height,fwhm\n")
        for p in self.peaks:
            buf.write("%.17g,%.17g,%.17g\n" % (p.position, p.height, p.fwhm))
        return buf.getvalue()


def _half_crossing(omega, value, i_peak, half, direction):
    """Linearly interpolated omega where value crosses `half`, walking from
    i_peak in `direction`; falls back to the series edge if never crossed."""
    i = i_peak
    while 0 <= i + direction < len(value):
        j = i + direction
        if value[j] <= half:
            # interpolate between i and j
            v0, v1 = value[i], value[j]
            w0, w1 = omega[i], omega[j]
            if v1 == v0:
                return w1
            return w0 + (half - v0) * (w1 - w0) / (v1 - v0)
        i = j
    return omega[0] if direction < 0 else omega[-1]


def find_peaks(series: SpectrumSeries, min_prominence: float = 0.02) -> PeakSet:
    """Local maxima with prominence >= min_prominence * global max, plus FWHM
    from linearly interpolated half-height crossings."""
    v = series.value
    if v.size == 0 or np.max(v) <= 0:
        return PeakSet([])
    idx, _ = signal.find_peaks(v, prominence=min_prominence * np.max(v))
    peaks = []
    for i in idx:
        half = 0.5 * v[i]
        left = _half_crossing(series.omega, v, i, half, -1)
        right = _half_crossing(series.omega, v, i, half, +1)
        peaks.append(Peak(position=float(series.omega[i]),
                          height=float(v[i]),
                          fwhm=float(right - left)))
    peaks.sort(key=lambda p: p.position)
    return PeakSet(peaks)


def compare(a: SpectrumSeries, b: SpectrumSeries, min_prominence: float = 0.02) -> dict:
    """Deterministic line-shape comparison after unit-peak normalization.

    Both series are resampled (linear interpolation) onto a common uniform
    grid over the overlap of their domains.
    """
    lo = max(a.omega[0], b.omega[0])
    hi = min(a.omega[-1], b.omega[-1])
    if hi <= lo:
        raise ValueError("spectra have disjoint frequency grids")
    n = max(a.omega.size, b.omega.size)
    grid = np.linspace(lo, hi, n)
    an = a.normalized()
    bn = b.normalized()
    va = np.interp(grid, an.omega, an.value)
    vb = np.interp(grid, bn.omega, bn.value)
    denom = max(np.linalg.norm(va), np.linalg.norm(vb))
    l2 = float(np.linalg.norm(va - vb) / denom) if denom > 0 else 0.0
    linf = float(np.max(np.abs(va - vb)))

    pa = find_peaks(an, min_prominence)
    pb = find_peaks(bn, min_prominence)
    n_match = min(len(pa), len(pb))
    offsets = [float(x - y) for x, y in zip(sorted(pa.positions)[:n_match],
                                            sorted(pb.positions)[:n_match])]
    return {
        "grid": {"lo": lo, "hi": hi, "points": int(n)},
        "l2_rel": l2,
        "linf": linf,
        "peaks_a": len(pa),
        "peaks_b": len(pb),
        "peak_offsets": offsets,
        "method_a": a.meta.get("method"),
        "method_b": b.meta.get("method"),
    }


def comparison_report_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True)


def splitting_estimate(kernels, d: float) -> float:
    """Doublet-splitting estimate 2|V_c + shift(eta*omega0, d)| from the
    transformed-frame kernels."""
    w = kernels.eta * kernels.params.omega0
    return 2.0 * abs(kernels.v_c + kernels.delta(w, d))
