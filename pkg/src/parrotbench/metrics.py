"""Forecast and attractor-reconstruction metrics.

Pointwise errors (sMAPE, MSE, MAE), valid prediction time, KL divergence
between Gaussian-mixture attractor densities, Welch power spectra with
Hellinger distance, Grassberger-Procaccia correlation dimension, and a
nearest-neighbor-divergence largest-Lyapunov-exponent estimator.  Everything
is deterministic given its explicit seed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import signal, spatial, stats
from scipy.spatial.distance import pdist
from scipy.special import logsumexp

__all__ = [
    "MetricReport",
    "smape",
    "mse",
    "mae",
    "rolling_smape",
    "smape_at_lyapunov_time",
    "valid_prediction_time",
    "kl_attractor",
    "welch_psd",
    "hellinger_psd",
    "correlation_dimension",
    "delay_embed",
    "lyapunov_rosenstein",
]

VPT_THRESHOLD_DEFAULT = 30.0


@dataclass
class MetricReport:
    """A named metric value plus the settings used to compute it."""

    metric: str
    value: float
    horizon: float | None = None
    settings: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "metric": self.metric,
            "value": self.value,
            "horizon": self.horizon,
            "settings": self.settings,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _paired(truth, pred) -> tuple[np.ndarray, np.ndarray]:
    t = np.asarray(truth, dtype=float).ravel()
    p = np.asarray(pred, dtype=float).ravel()
    if t.size != p.size:
        raise ValueError(f"length mismatch: truth has {t.size}, pred has {p.size}")
    if t.size == 0:
        raise ValueError("empty sequences")
    return t, p


def _smape_terms(t: np.ndarray, p: np.ndarray) -> np.ndarray:
    denom = np.abs(t) + np.abs(p)
    return np.divide(
        np.abs(t - p), denom, out=np.zeros_like(denom), where=denom > 0
    )


def smape(truth, pred) -> float:
    """Symmetric mean absolute percentage error, in [0, 200].

    Terms with a zero denominator (both values zero) contribute 0.
    """
    t, p = _paired(truth, pred)
    return float(200.0 * _smape_terms(t, p).mean())


def mse(truth, pred) -> float:
    t, p = _paired(truth, pred)
    return float(np.mean((t - p) ** 2))


def mae(truth, pred) -> float:
    t, p = _paired(truth, pred)
    return float(np.mean(np.abs(t - p)))


def rolling_smape(truth, pred) -> np.ndarray:
    """sMAPE of the growing prefix: element t covers points 0..t inclusive."""
    t, p = _paired(truth, pred)
    terms = _smape_terms(t, p)
    return 200.0 * np.cumsum(terms) / np.arange(1, t.size + 1)


def smape_at_lyapunov_time(truth, pred, points_per_lyapunov: float, k: float = 1.0) -> float:
    """sMAPE over the first ``k`` Lyapunov times of the forecast."""
    n = max(1, int(round(k * points_per_lyapunov)))
    t, p = _paired(truth, pred)
    n = min(n, t.size)
    return smape(t[:n], p[:n])


def valid_prediction_time(
    truth,
    pred,
    points_per_lyapunov: float,
    threshold: float = VPT_THRESHOLD_DEFAULT,
) -> float:
    """Lyapunov times until the rolling sMAPE first exceeds ``threshold``.

    Returns the full horizon in Lyapunov times when the threshold is never
    exceeded.
    """
    if threshold < 0:
        raise ValueError("threshold must be >= 0")
    curve = rolling_smape(truth, pred)
    above = np.nonzero(curve > threshold)[0]
    t_star = int(above[0]) if above.size else curve.size
    return t_star / points_per_lyapunov


def _gmm_logpdf(x: np.ndarray, centers: np.ndarray, sigma: float) -> np.ndarray:
    """Log-density of an equal-weight isotropic Gaussian mixture at rows of x."""
    d = centers.shape[1]
    sq = spatial.distance.cdist(x, centers, "sqeuclidean")
    log_norm = -0.5 * d * math.log(2.0 * math.pi * sigma**2) - math.log(len(centers))
    return logsumexp(-sq / (2.0 * sigma**2), axis=1) + log_norm


def _subsample(points: np.ndarray, max_points: int) -> np.ndarray:
    if len(points) <= max_points:
        return points
    idx = np.linspace(0, len(points) - 1, max_points).round().astype(int)
    return points[idx]


def kl_attractor(
    truth_traj,
    pred_traj,
    sigma: float = 1.0,
    n_samples: int = 1000,
    seed: int = 0,
    max_points: int = 5000,
    log_floor: float = -1e4,
) -> MetricReport:
    """Monte Carlo KL divergence between attractor point-cloud densities.

    Equal-weight isotropic Gaussian mixtures (covariance ``sigma**2 * I``)
    are placed on the true and predicted trajectories; ``n_samples`` draws
    from the truth mixture estimate ``E[log P - log Q]``.  Trajectories
    longer than ``max_points`` are subsampled evenly.  If the predicted
    density underflows at a sample, its log-density is clamped at
    ``log_floor`` and the report is flagged.
    """
    P = np.atleast_2d(np.asarray(truth_traj, dtype=float))
    Q = np.atleast_2d(np.asarray(pred_traj, dtype=float))
    if P.ndim != 2 or Q.ndim != 2 or P.shape[0] == 0 or Q.shape[0] == 0:
        raise ValueError("trajectories must be non-empty 2-D point sets")
    if P.shape[1] != Q.shape[1]:
        raise ValueError("trajectories have mismatched dimensions")
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    P = _subsample(P, max_points)
    Q = _subsample(Q, max_points)

    rng = np.random.default_rng(seed)
    comp = rng.integers(0, len(P), size=n_samples)
    x = P[comp] + sigma * rng.standard_normal((n_samples, P.shape[1]))

    log_p = _gmm_logpdf(x, P, sigma)
    log_q = _gmm_logpdf(x, Q, sigma)
    clamped = int(np.sum(log_q < log_floor))
    log_q = np.maximum(log_q, log_floor)
    diffs = log_p - log_q
    value = float(diffs.mean())
    stderr = float(diffs.std(ddof=1) / math.sqrt(n_samples)) if n_samples > 1 else 0.0
    return MetricReport(
        metric="kl_attractor",
        value=value,
        settings={
            "sigma": sigma,
            "n_samples": n_samples,
            "seed": seed,
            "max_points": max_points,
            "mc_stderr": stderr,
            "clamped_samples": clamped,
        },
    )


def welch_psd(
    series, segment_length: int = 256, overlap: float = 0.5
) -> tuple[np.ndarray, np.ndarray]:
    """Hann-windowed averaged periodogram, normalized to sum to 1.

    Returns ``(frequencies, spectrum)`` with frequencies in cycles per
    sample.  The spectrum is treated as a probability distribution over
    frequency bins.
    """
    x = np.asarray(series, dtype=float).ravel()
    if x.size < segment_length:
        raise ValueError(
            f"series length {x.size} shorter than segment_length {segment_length}"
        )
    if not 0 <= overlap < 1:
        raise ValueError("overlap must lie in [0, 1)")
    freqs, psd = signal.welch(
        x,
        window="hann",
        nperseg=segment_length,
        noverlap=int(segment_length * overlap),
        detrend="constant",
    )
    total = psd.sum()
    if total == 0:
        raise ValueError("spectrum is identically zero")
    return freqs, psd / total


def hellinger_psd(s1, s2) -> float:
    """Hellinger distance between two spectra, in [0, 1]."""
    a = np.asarray(s1, dtype=float).ravel()
    b = np.asarray(s2, dtype=float).ravel()
    if a.size != b.size:
        raise ValueError("spectra have different lengths")
    a = a / a.sum()
    b = b / b.sum()
    h = np.linalg.norm(np.sqrt(a) - np.sqrt(b)) / math.sqrt(2.0)
    return float(min(1.0, h))


def correlation_dimension(
    traj,
    r_min_quantile: float = 0.002,
    r_max_quantile: float = 0.05,
    n_radii: int = 12,
    max_points: int = 5000,
) -> MetricReport:
    """Correlation dimension from the scaling of the pair-count sum.

    Counts point pairs within radius eps on a log-spaced grid between the
    given quantiles of the pairwise-distance distribution and fits the slope
    of log C(eps) against log eps by least squares.  The window sits in the
    small-distance tail: at macroscopic radii the pair count saturates and
    the slope is biased low on bounded sets.
    """
    pts = np.atleast_2d(np.asarray(traj, dtype=float))
    if pts.shape[0] < 10:
        raise ValueError("need at least 10 points")
    pts = _subsample(pts, max_points)
    d = pdist(pts)
    r_lo, r_hi = np.quantile(d, [r_min_quantile, r_max_quantile])
    if r_hi <= 0:
        raise ValueError("degenerate point set: all points identical")
    if r_lo <= 0:
        pos = d[d > 0]
        if pos.size == 0:
            raise ValueError("degenerate point set: all points identical")
        r_lo = pos.min()
    radii = np.geomspace(r_lo, r_hi, n_radii)
    counts = np.searchsorted(np.sort(d), radii, side="right")
    valid = counts > 0
    if valid.sum() < 2:
        raise ValueError("too few occupied radii to fit a slope")
    fit = stats.linregress(np.log(radii[valid]), np.log(counts[valid]))
    return MetricReport(
        metric="correlation_dimension",
        value=float(fit.slope),
        settings={
            "r_min_quantile": r_min_quantile,
            "r_max_quantile": r_max_quantile,
            "n_radii": n_radii,
            "n_points": len(pts),
            "r_squared": float(fit.rvalue**2),
        },
    )


def delay_embed(series, embed_dim: int, lag: int) -> np.ndarray:
    """Time-delay embedding: row i is ``series[i + lag * (0..embed_dim-1)]``."""
    x = np.asarray(series, dtype=float).ravel()
    n = x.size - (embed_dim - 1) * lag
    if n < 1:
        raise ValueError("series too short for this embedding")
    return np.stack([x[i * lag : i * lag + n] for i in range(embed_dim)], axis=1)


def lyapunov_rosenstein(
    series,
    embed_dim: int = 5,
    lag: int = 3,
    points_per_lyapunov: float = 30.0,
    max_points: int = 6000,
    seed: int = 0,
) -> MetricReport:
    """Largest Lyapunov exponent from nearest-neighbor divergence.

    The scalar series is delay-embedded; each point is paired with its
    nearest neighbor outside a temporal exclusion window, the mean log
    separation is tracked forward in time, and the slope of its initial
    linear region (the first Lyapunov time) gives the exponent.  The value
    is returned in units of inverse Lyapunov time, so a ground-truth series
    sampled at ``points_per_lyapunov`` should give roughly 1.  If the fit is
    poor (r-squared < 0.8) the report is flagged low-confidence rather than
    rejected.
    """
    x = np.asarray(series, dtype=float).ravel()
    if x.size < 2000:
        raise ValueError("need at least 2000 points")
    if x.size > max_points:
        x = x[:max_points]
    emb = delay_embed(x, embed_dim, lag)
    n = len(emb)
    theiler = max(1, int(round(points_per_lyapunov)))
    # The first ~tau/3 of the divergence curve is an alignment transient with
    # inflated slope; the fit covers the two Lyapunov times that follow it.
    fit_skip = int(round(points_per_lyapunov / 3))
    fit_width = max(3, int(round(2 * points_per_lyapunov)))
    follow = fit_skip + fit_width
    n_base = n - follow
    if n_base < 10:
        raise ValueError("series too short for divergence tracking")

    # Exact repeats (periodic signals, copied rollouts) sit at zero distance
    # and carry no divergence information; treat them as the same point.
    floor = 1e-8 * max(float(x.std()), 1e-300)

    tree = spatial.cKDTree(emb[:n_base])
    k_query = min(100, n_base)
    dists, idxs = tree.query(emb[:n_base], k=k_query)
    partner = np.full(n_base, -1)
    for i in range(n_base):
        for d_ij, j in zip(dists[i], idxs[i]):
            if abs(int(j) - i) > theiler and d_ij > floor:
                partner[i] = int(j)
                break
    ok = partner >= 0
    if ok.sum() < max(10, n_base // 10):
        raise ValueError("too few usable neighbor pairs for divergence tracking")
    base = np.nonzero(ok)[0]
    pairs = partner[ok]

    curve = np.empty(follow)
    for t in range(follow):
        sep = np.linalg.norm(emb[base + t] - emb[pairs + t], axis=1)
        curve[t] = np.mean(np.log(np.maximum(sep, floor)))

    ts = np.arange(fit_skip, follow, dtype=float)
    fit = stats.linregress(ts, curve[fit_skip:])
    r2 = float(fit.rvalue**2)
    value = float(fit.slope * points_per_lyapunov)
    return MetricReport(
        metric="lyapunov_rosenstein",
        value=value,
        settings={
            "embed_dim": embed_dim,
            "lag": lag,
            "points_per_lyapunov": points_per_lyapunov,
            "fit_skip": fit_skip,
            "fit_points": int(follow - fit_skip),
            "r_squared": r2,
            "low_confidence": r2 < 0.8,
        },
    )
