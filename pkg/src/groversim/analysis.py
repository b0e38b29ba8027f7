"""Decay-rate extraction from observable traces.

All fits are linear least squares on the log of the observable.  When
standard errors are available the points are weighted by (value / stderr)^2,
the delta-method variance of the log; samples too close to zero or to the
noise floor are excluded before taking the log.  The headline quantity is
the dimensionless ratio C = rate / (Gamma * n_g * n_tot), which collapses
runs of different size and damping strength onto one number.

Ensemble-mean traces are correlated in time through the trajectories they
average, so the textbook least-squares slope error badly understates the
run-to-run scatter of the fitted rate (measured at roughly a factor ten for
typical campaign sizes).  When the per-trajectory traces are supplied the
rate uncertainty is therefore estimated by a leave-one-out jackknife over
trajectories, which needs no extra randomness and captures the correlation.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grover import GroverConfig, half_period

__all__ = [
    "DecayFit",
    "fit_exponential",
    "peak_times",
    "fit_peak_decay",
    "CSummary",
    "extract_c",
]

FIT_FLOOR = 0.01
_MIN_POINTS = 4
_WEIGHT_CAP_RATIO = 1e6
_MIN_JACKKNIFE = 8


@dataclass
class DecayFit:
    """Result of one exponential decay fit.

    ``rate`` is per iteration; ``window`` is the inclusive iteration range
    offered to the fit (before floor exclusions).  The run labels (damping
    strength, gate count, register size, searched index) ride along so fits
    from a whole campaign can be compared without extra bookkeeping.
    """

    ok: bool
    rate: float = float("nan")
    rate_stderr: float = float("nan")
    window: tuple = (0, 0)
    n_points: int = 0
    source: str = "series"
    reason: str = ""
    damping: float = float("nan")
    n_g_used: int = 0
    n_tot: int = 0
    tau: int = -1
    n_u: int = -1

    @property
    def rate_bound(self) -> float:
        """The natural rate scale Gamma * n_g * n_tot of the run."""
        return self.damping * self.n_g_used * self.n_tot

    @property
    def c_value(self) -> float:
        """Fitted rate in units of the natural scale; nan when undefined."""
        bound = self.rate_bound
        if not self.ok or not np.isfinite(bound) or bound <= 0.0:
            return float("nan")
        return self.rate / bound


def _usable(t, v, err, window, floor):
    sel = (t >= window[0]) & (t <= window[1])
    cut = np.full_like(v, floor)
    if err is not None:
        cut = np.maximum(cut, 3.0 * err)
    return sel & (v >= cut)


def _wls_slope(t, v, err, mask):
    """Weighted log-linear slope over masked points.

    Returns (rate, stderr) or None when the design matrix is degenerate.
    """
    tt = t[mask]
    y = np.log(v[mask])
    if err is not None:
        sig = np.maximum(err[mask] / v[mask], 1e-12)
        w = 1.0 / (sig * sig)
        w = np.minimum(w, _WEIGHT_CAP_RATIO * np.median(w))
    else:
        w = np.ones_like(y)
    sw = np.sqrt(w)
    a = np.column_stack([np.ones_like(tt), tt]) * sw[:, None]
    b = y * sw
    coef, _, rank, _ = np.linalg.lstsq(a, b, rcond=None)
    if rank < 2:
        return None
    cov = np.linalg.inv(a.T @ a)
    if err is None:
        resid = b - a @ coef
        cov = cov * float(resid @ resid) / max(len(tt) - 2, 1)
    return float(-coef[1]), float(np.sqrt(cov[1, 1]))


def _jackknife_stderr(t, samples, window, floor):
    """Leave-one-trajectory-out scatter of the fitted rate.

    Each left-out replicate rebuilds the ensemble mean and stderr, redoes the
    floor exclusion and the weighted fit, so selection effects propagate into
    the error.  Returns None when too few replicates produce a valid fit.
    """
    m = samples.shape[0]
    s1 = samples.sum(axis=0)
    s2 = (samples * samples).sum(axis=0)
    slopes = []
    for i in range(m):
        mu = (s1 - samples[i]) / (m - 1)
        var = (s2 - samples[i] ** 2 - (m - 1) * mu ** 2) / (m - 2)
        err = np.sqrt(np.maximum(var, 0.0) / (m - 1))
        mask = _usable(t, mu, err, window, floor)
        if int(mask.sum()) < _MIN_POINTS:
            continue
        out = _wls_slope(t, mu, err, mask)
        if out is not None:
            slopes.append(out[0])
    if len(slopes) < max(_MIN_JACKKNIFE, (9 * m) // 10):
        return None
    slopes = np.asarray(slopes)
    k = len(slopes)
    return float(np.sqrt((k - 1) / k * ((slopes - slopes.mean()) ** 2).sum()))


def fit_exponential(t, values=None, stderr=None, *, samples=None,
                    window: tuple | None = None, floor: float = FIT_FLOOR,
                    source: str = "series", damping: float = float("nan"),
                    n_g_used: int = 0, n_tot: int = 0, tau: int = -1,
                    n_u: int = -1) -> DecayFit:
    """Fit values ~ A * exp(-rate * t) by weighted least squares on log values.

    Points outside ``window`` (inclusive) are dropped, as is every sample with
    value < max(floor, 3 * stderr).  At least 4 points must survive.

    Exactly one of ``values`` and ``samples`` must be given.  ``samples`` is a
    (trajectories, times) array of per-trajectory traces; the mean and stderr
    are derived from it and the rate uncertainty comes from a jackknife over
    trajectories instead of the (far too small) least-squares slope error.
    """
    t = np.asarray(t, dtype=np.float64)
    if (values is None) == (samples is None):
        raise ValueError("pass exactly one of values and samples")
    if samples is not None:
        samples = np.asarray(samples, dtype=np.float64)
        if samples.ndim != 2 or samples.shape[1] != t.size:
            raise ValueError("samples must have shape (trajectories, len(t))")
        m = samples.shape[0]
        values = samples.mean(axis=0)
        if m > 1:
            stderr = samples.std(axis=0, ddof=1) / np.sqrt(m)
        else:
            stderr = None
    v = np.asarray(values, dtype=np.float64)
    if stderr is not None:
        stderr = np.asarray(stderr, dtype=np.float64)
        if stderr.shape != v.shape:
            raise ValueError("stderr shape does not match values")
    if t.shape != v.shape:
        raise ValueError("t shape does not match values")
    if window is None:
        window = (float(t.min()), float(t.max())) if t.size else (0, 0)
    labels = dict(source=source, damping=damping, n_g_used=n_g_used,
                  n_tot=n_tot, tau=tau, n_u=n_u)
    mask = _usable(t, v, stderr, window, floor)
    n_sel = int(mask.sum())
    if n_sel < _MIN_POINTS:
        return DecayFit(ok=False, window=window, n_points=n_sel,
                        reason=f"only {n_sel} usable samples", **labels)
    out = _wls_slope(t, v, stderr, mask)
    if out is None:
        return DecayFit(ok=False, window=window, n_points=n_sel,
                        reason="degenerate sample times", **labels)
    rate, rate_err = out
    if samples is not None and samples.shape[0] >= _MIN_JACKKNIFE:
        jack = _jackknife_stderr(t, samples, window, floor)
        if jack is not None:
            # the larger estimate wins; a collapsed jackknife (identical
            # replicates) must not shrink the quoted error below the naive one
            rate_err = max(rate_err, jack)
    return DecayFit(ok=True, rate=rate, rate_stderr=rate_err,
                    window=window, n_points=n_sel, **labels)


def peak_times(config: GroverConfig, t_max: int) -> np.ndarray:
    """Iteration indices nearest the success-probability maxima up to t_max.

    The ideal probability sin^2((t + 1/2) omega) peaks at (2k+1) * t_half -
    1/2 for integer k, with t_half the half period.
    """
    t_half = half_period(config)
    out = []
    k = 0
    while True:
        tk = int(round((2 * k + 1) * t_half - 0.5))
        if tk > t_max:
            break
        out.append(tk)
        k += 1
    return np.asarray(out, dtype=np.int64)


def fit_peak_decay(t, values, stderr=None, *, samples=None,
                   config: GroverConfig, floor: float = FIT_FLOOR,
                   damping: float = float("nan"),
                   n_g_used: int = 0) -> DecayFit:
    """Exponential fit through the success-probability oscillation maxima.

    Requires the trace to be sampled at every integer iteration from 0 and to
    span at least two maxima.  ``samples`` as in fit_exponential.
    """
    t = np.asarray(t)
    v = np.asarray(values, dtype=np.float64)
    t_max = int(t[-1])
    if not np.array_equal(t, np.arange(t_max + 1)):
        raise ValueError("peak fitting expects a dense integer time axis")
    peaks = peak_times(config, t_max)
    labels = dict(source="w_G-peaks", damping=damping, n_g_used=n_g_used,
                  n_tot=config.n_tot, tau=config.tau, n_u=config.n_u)
    if len(peaks) < 2:
        return DecayFit(ok=False, window=(0, t_max), n_points=0,
                        reason=f"only {len(peaks)} oscillation maxima", **labels)
    sub_err = None if stderr is None else np.asarray(stderr)[peaks]
    sub_samp = None if samples is None else np.asarray(samples)[:, peaks]
    if sub_samp is not None:
        fit = fit_exponential(peaks, samples=sub_samp, floor=floor, **labels)
    else:
        fit = fit_exponential(peaks, v[peaks], sub_err, floor=floor, **labels)
    # fit_exponential needs >= 4 surviving points; with fewer (but >= 2)
    # well-resolved maxima fall back to the same fit with the bar lowered
    if not fit.ok and fit.n_points >= 2:
        sel_v = v[peaks]
        cut = np.full_like(sel_v, floor)
        if sub_err is not None:
            cut = np.maximum(cut, 3.0 * sub_err)
        keep = sel_v >= cut
        if keep.sum() >= 2:
            fit = _two_point_fallback(peaks[keep], sel_v[keep],
                                      None if sub_err is None else sub_err[keep],
                                      labels, (0, t_max))
    return fit


def _two_point_fallback(tt, vv, ee, labels, window) -> DecayFit:
    y = np.log(vv)
    if ee is not None:
        sig = np.maximum(ee / vv, 1e-12)
    else:
        sig = np.full_like(vv, 1e-3)
    w = 1.0 / (sig * sig)
    sw = np.sqrt(w)
    a = np.column_stack([np.ones_like(tt, dtype=float), tt.astype(float)]) * sw[:, None]
    coef, _, rank, _ = np.linalg.lstsq(a, y * sw, rcond=None)
    if rank < 2:
        return DecayFit(ok=False, window=window, n_points=len(tt),
                        reason="degenerate peak times", **labels)
    cov = np.linalg.inv(a.T @ a)
    return DecayFit(ok=True, rate=float(-coef[1]),
                    rate_stderr=float(np.sqrt(cov[1, 1])),
                    window=window, n_points=len(tt), **labels)


@dataclass
class CSummary:
    """Collected rate constants from a campaign of fits."""

    c_values: np.ndarray
    fits: list
    excluded: list = field(default_factory=list)

    @property
    def mean(self) -> float:
        return float(self.c_values.mean()) if self.c_values.size else float("nan")

    @property
    def std(self) -> float:
        if self.c_values.size < 2:
            return float("nan")
        return float(self.c_values.std(ddof=1))


def extract_c(fits) -> CSummary:
    """Pool the dimensionless rate constants of successful fits.

    Fits with zero damping carry no rate constant and are excluded, as are
    failed fits; both are reported with a reason.
    """
    kept = []
    cs = []
    excluded = []
    for fit in fits:
        if not fit.ok:
            excluded.append((fit, "fit failed: " + (fit.reason or "unknown")))
        elif not (fit.damping > 0.0):
            excluded.append((fit, "zero damping has no rate constant"))
        elif fit.n_g_used <= 0 or fit.n_tot <= 0:
            excluded.append((fit, "missing gate count or register size"))
        else:
            kept.append(fit)
            cs.append(fit.c_value)
    return CSummary(np.asarray(cs, dtype=np.float64), kept, excluded)
