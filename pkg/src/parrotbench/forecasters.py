"""Zero-shot forecasters built on motif matching in delay-embedding space.

The core method scans the context for the window most similar to its final
``embed_dim`` points and copies (periodically tiles) whatever followed that
window.  Kernel-weighted generalizations (k-NN, simplex projection,
exponentially weighted regression, Nadaraya-Watson) average the continuations
of many windows instead of copying one, and a discrete token variant fits a
smoothed Markov chain to the context.  Trivial mean/last-value baselines round
out the set.

All forecasters are pure functions of their inputs; contexts are univariate
(multivariate callers forecast each dimension independently).
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.spatial.distance import pdist

__all__ = [
    "EmbedParams",
    "KernelParams",
    "ForecastResult",
    "MarkovForecast",
    "parrot_forecast",
    "knn_forecast",
    "simplex_projection",
    "smap_forecast",
    "nw_forecast",
    "markov_parrot",
    "mean_baseline",
    "naive_baseline",
]

KERNEL_KINDS = ("gaussian", "smap_exponential", "softmax_dot")


@dataclass(frozen=True)
class EmbedParams:
    """Motif length, forecast horizon, and trailing-motif exclusion.

    ``embed_dim`` is the length of the query window (the delay-embedding
    dimension); ``horizon`` is the number of points to forecast.
    ``exclusion`` motifs immediately preceding the query are excluded from
    the search so the match cannot sit on top of the query itself; it
    defaults to ``embed_dim``.
    """

    embed_dim: int
    horizon: int
    exclusion: int | None = None

    def __post_init__(self):
        if self.embed_dim < 1:
            raise ValueError("embed_dim must be >= 1")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.exclusion is None:
            object.__setattr__(self, "exclusion", self.embed_dim)
        elif self.exclusion < 0:
            raise ValueError("exclusion must be >= 0")

    def min_context(self) -> int:
        """Smallest context length admitting at least one searchable motif."""
        return 2 * self.embed_dim + self.exclusion


@dataclass(frozen=True)
class KernelParams:
    """Similarity kernel for weighting motifs.

    ``bandwidth`` is the Gaussian width h, the exponential decay rate, or the
    softmax temperature depending on ``kind``.  ``dbar`` is the distance
    scale of the exponential kernel (mean pairwise motif distance); when
    None it is computed from the context.
    """

    kind: str = "gaussian"
    bandwidth: float = 1.0
    dbar: float | None = None

    def __post_init__(self):
        if self.kind not in KERNEL_KINDS:
            raise ValueError(f"kernel kind must be one of {KERNEL_KINDS}")
        if not self.bandwidth > 0:
            raise ValueError("bandwidth must be positive")
        if self.kind == "smap_exponential" and self.dbar is not None and not self.dbar > 0:
            raise ValueError("dbar must be positive when given")


@dataclass
class ForecastResult:
    """A forecast plus the provenance of how it was produced.

    ``match_end`` is the index at which the copied continuation starts (the
    matched motif is ``context[match_end - embed_dim : match_end]``);
    ``match_distance`` is the Euclidean distance of that best match.
    ``weights_entropy`` is the Shannon entropy of the motif weights for
    kernel methods.
    """

    prediction: np.ndarray
    method: str
    match_end: int | None = None
    match_distance: float | None = None
    weights_entropy: float | None = None
    note: str | None = None


def _as_context(context) -> np.ndarray:
    c = np.asarray(context, dtype=float)
    if c.ndim != 1:
        raise ValueError(f"context must be univariate, got shape {c.shape}")
    if c.size < 1:
        raise ValueError("context is empty")
    if not np.all(np.isfinite(c)):
        raise ValueError("context contains NaN or infinite values")
    return c


def _admissible_search(context: np.ndarray, p: EmbedParams):
    """Distances from the query to every admissible motif.

    Returns ``(dists, ends)`` where ``ends[j]`` is the motif end index (the
    continuation starts at ``context[ends[j]:]``).  Admissible motifs lie
    fully inside the first ``L - embed_dim`` points with the trailing
    ``exclusion`` motifs skipped.
    """
    L = context.size
    D = p.embed_dim
    min_len = p.min_context()
    if L < min_len:
        raise ValueError(
            f"context length {L} too short for embed_dim={D}, "
            f"exclusion={p.exclusion}; need at least {min_len}"
        )
    windows = sliding_window_view(context, D)  # row j = context[j : j + D]
    n_adm = L - 2 * D - p.exclusion + 1
    query = context[L - D :]
    diffs = windows[:n_adm] - query
    dists = np.sqrt(np.einsum("ij,ij->i", diffs, diffs))
    ends = np.arange(D, D + n_adm)
    return dists, ends


def _tile_continuation(context: np.ndarray, end: int, horizon: int) -> np.ndarray:
    """Periodically tile ``context[end:]`` out to ``horizon`` points."""
    return np.resize(context[end:], horizon)


def _continuation_matrix(context: np.ndarray, ends: np.ndarray, horizon: int) -> np.ndarray:
    """Stack tiled continuations for all motif ends, shape (len(ends), horizon)."""
    L = context.size
    periods = L - ends
    t = np.arange(horizon)
    idx = ends[:, None] + t[None, :] % periods[:, None]
    return context[idx]


def parrot_forecast(context, p: EmbedParams) -> ForecastResult:
    """Forecast by copying the continuation of the best-matching motif.

    The query is the final ``embed_dim`` points of the context.  Euclidean
    distances to all admissible motifs are computed by exact linear scan; the
    minimizer (earliest index on ties) is selected, and its continuation is
    repeated periodically until ``horizon`` points have been produced.  The
    copied values are verbatim context values.
    """
    c = _as_context(context)
    dists, ends = _admissible_search(c, p)
    j = int(np.argmin(dists))  # argmin returns the first minimum: earliest tie wins
    end = int(ends[j])
    return ForecastResult(
        prediction=_tile_continuation(c, end, p.horizon),
        method="parrot",
        match_end=end,
        match_distance=float(dists[j]),
    )


def _log_weights(
    context: np.ndarray,
    dists: np.ndarray,
    ends: np.ndarray,
    p: EmbedParams,
    kp: KernelParams,
) -> np.ndarray:
    if kp.kind == "gaussian":
        return -(dists**2) / (2.0 * kp.bandwidth**2)
    if kp.kind == "smap_exponential":
        dbar = kp.dbar if kp.dbar is not None else mean_pairwise_motif_distance(
            context, p.embed_dim
        )
        return -kp.bandwidth * dists / dbar
    # softmax_dot: dot-product similarity with temperature
    D = p.embed_dim
    windows = sliding_window_view(context, D)[: ends.size]
    query = context[context.size - D :]
    return (windows @ query) / kp.bandwidth


def _softmax(logw: np.ndarray) -> np.ndarray:
    w = np.exp(logw - logw.max())
    total = w.sum()
    if total == 0 or not np.isfinite(total):
        return None  # caller falls back to 1-NN
    return w / total


def _entropy(w: np.ndarray) -> float:
    nz = w[w > 0]
    return float(-(nz * np.log(nz)).sum())


def mean_pairwise_motif_distance(context, embed_dim: int) -> float:
    """Mean Euclidean distance over all pairs of length-``embed_dim`` windows."""
    c = _as_context(context)
    if c.size < embed_dim + 1:
        raise ValueError("context too short to form two motifs")
    windows = sliding_window_view(c, embed_dim)
    return float(pdist(windows).mean())


def knn_forecast(context, p: EmbedParams, k: int, kp: KernelParams) -> ForecastResult:
    """Average the continuations of the k highest-weight motifs.

    Weights come from ``kp`` and are renormalized over the selected k;
    continuations shorter than the horizon are periodically tiled before
    averaging, so ``k=1`` reproduces :func:`parrot_forecast` exactly.
    """
    c = _as_context(context)
    dists, ends = _admissible_search(c, p)
    if not 1 <= k <= ends.size:
        raise ValueError(f"k={k} outside [1, {ends.size}] admissible motifs")
    logw = _log_weights(c, dists, ends, p, kp)
    order = np.argsort(-logw, kind="stable")[:k]  # ties keep earliest motif first
    w = _softmax(logw[order])
    note = None
    if w is None:
        w = np.zeros(k)
        w[0] = 1.0
        note = "kernel weights underflowed; fell back to nearest neighbor"
    conts = _continuation_matrix(c, ends[order], p.horizon)
    pred = w @ conts if k > 1 else conts[0]
    best = int(order[0])
    return ForecastResult(
        prediction=pred,
        method="knn",
        match_end=int(ends[best]),
        match_distance=float(dists[best]),
        weights_entropy=_entropy(w),
        note=note,
    )


def simplex_projection(context, embed_dim: int) -> float:
    """One-step forecast from the ``embed_dim + 1`` nearest motifs.

    The Gaussian bandwidth is set to the distance of the single nearest
    motif, which reproduces the classical exponential down-weighting of the
    farther neighbors; when the nearest match is exact, the zero-distance
    neighbors share the weight equally.
    """
    p = EmbedParams(embed_dim=embed_dim, horizon=1)
    c = _as_context(context)
    dists, ends = _admissible_search(c, p)
    k = embed_dim + 1
    if ends.size < k:
        raise ValueError(f"need at least {k} admissible motifs, have {ends.size}")
    order = np.argsort(dists, kind="stable")[:k]
    d1 = float(dists[order[0]])
    if d1 > 0:
        result = knn_forecast(
            c, p, k, KernelParams(kind="gaussian", bandwidth=d1)
        )
        return float(result.prediction[0])
    # exact matches: bandwidth -> 0 limit puts all weight on zero-distance motifs
    sel = order[dists[order] == 0]
    nxt = c[ends[sel]]
    return float(nxt.mean())


def smap_forecast(context, p: EmbedParams, theta: float) -> ForecastResult:
    """Exponentially weighted average over all admissible continuations.

    Weights are ``exp(-theta * d / dbar)`` where ``dbar`` is the mean
    pairwise distance among all motifs in the context; ``theta = 0`` gives
    the unweighted global average, large ``theta`` concentrates on the
    nearest motif.
    """
    if theta < 0:
        raise ValueError("theta must be >= 0")
    c = _as_context(context)
    dists, ends = _admissible_search(c, p)
    if ends.size < 2:
        raise ValueError("need at least 2 admissible motifs")
    note = None
    if theta == 0:
        logw = np.zeros(ends.size)
    else:
        dbar = mean_pairwise_motif_distance(c, p.embed_dim)
        if dbar == 0:
            logw = np.zeros(ends.size)
            note = "all motifs identical (dbar=0); used uniform weights"
        else:
            logw = -theta * dists / dbar
    w = _softmax(logw)
    if w is None:
        w = np.zeros(ends.size)
        w[int(np.argmin(dists))] = 1.0
        note = "kernel weights underflowed; fell back to nearest neighbor"
    conts = _continuation_matrix(c, ends, p.horizon)
    best = int(np.argmin(dists))
    return ForecastResult(
        prediction=w @ conts,
        method="smap",
        match_end=int(ends[best]),
        match_distance=float(dists[best]),
        weights_entropy=_entropy(w),
        note=note,
    )


def nw_forecast(context, p: EmbedParams, kp: KernelParams | None = None) -> ForecastResult:
    """Kernel-regression forecast: weighted sum of all admissible continuations.

    With the default Gaussian kernel the bandwidth interpolates between
    copying the single nearest motif (h -> 0) and the global average of all
    continuations (h -> infinity).  Weights are computed in log space, so
    tiny bandwidths resolve to the nearest motif rather than underflowing;
    if normalization still fails the forecast falls back to the nearest
    neighbor and says so in ``note``.
    """
    kp = kp or KernelParams()
    c = _as_context(context)
    dists, ends = _admissible_search(c, p)
    logw = _log_weights(c, dists, ends, p, kp)
    w = _softmax(logw)
    note = None
    if w is None:
        w = np.zeros(ends.size)
        w[int(np.argmin(dists))] = 1.0
        note = "kernel weights underflowed; fell back to nearest neighbor"
    conts = _continuation_matrix(c, ends, p.horizon)
    best = int(np.argmax(logw))
    return ForecastResult(
        prediction=w @ conts,
        method="nw",
        match_end=int(ends[best]),
        match_distance=float(dists[best]),
        weights_entropy=_entropy(w),
        note=note,
    )


def mean_baseline(context, horizon: int) -> ForecastResult:
    """Repeat the context mean."""
    c = _as_context(context)
    return ForecastResult(
        prediction=np.full(horizon, c.mean()), method="mean"
    )


def naive_baseline(context, horizon: int) -> ForecastResult:
    """Repeat the last context value."""
    c = _as_context(context)
    return ForecastResult(
        prediction=np.full(horizon, c[-1]), method="naive"
    )


@dataclass
class MarkovForecast:
    """Smoothed conditional distribution over discrete continuations.

    ``probs`` maps candidate length-``horizon`` token tuples to their
    smoothed probabilities; ``mle`` is the argmax (lexicographically smallest
    on ties).  When the query prefix was never observed and smoothing is
    active with ``horizon > 1``, the distribution is uniform over the full
    token-sequence space and ``probs`` is left empty (see ``note``).
    """

    probs: dict[tuple[int, ...], float]
    mle: tuple[int, ...]
    note: str | None = None


def markov_parrot(
    tokens: Sequence[int], embed_dim: int, horizon: int, alpha: float, vocab: int
) -> MarkovForecast:
    """Fit a smoothed order-``embed_dim`` Markov chain to a token stream.

    Windows of length ``embed_dim + horizon`` are counted and keyed by their
    ``embed_dim``-token prefix; the query is the final ``embed_dim`` tokens.
    Pseudo-count ``alpha`` smooths the conditional distribution: for
    ``horizon == 1`` over the whole vocabulary, for longer horizons over the
    observed continuations only.
    """
    toks = [int(t) for t in tokens]
    if vocab < 1:
        raise ValueError("vocab must be >= 1")
    if any(t < 0 or t >= vocab for t in toks):
        raise ValueError("tokens must lie in [0, vocab)")
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    D, H, L = embed_dim, horizon, len(toks)
    if L < D + H:
        raise ValueError(f"need at least embed_dim + horizon = {D + H} tokens")

    counts: Counter[tuple[int, ...]] = Counter()
    for j in range(L - D - H + 1):
        prefix = tuple(toks[j : j + D])
        cont = tuple(toks[j + D : j + D + H])
        counts[(prefix, cont)] += 1

    query = tuple(toks[L - D :])
    observed = {
        cont: n for (prefix, cont), n in counts.items() if prefix == query
    }
    total = sum(observed.values())

    if not observed:
        if alpha == 0:
            raise ValueError(
                f"query prefix {query} never observed and alpha=0; the "
                "unsmoothed estimator is undefined"
            )
        if H == 1:
            probs = {(v,): 1.0 / vocab for v in range(vocab)}
            return MarkovForecast(probs=probs, mle=(0,), note="unseen prefix: uniform")
        return MarkovForecast(
            probs={},
            mle=(0,) * H,
            note=f"unseen prefix: uniform over all {vocab}^{H} sequences",
        )

    if H == 1:
        denom = total + alpha * vocab
        if alpha > 0:
            cands = [(v,) for v in range(vocab)]
        else:
            cands = sorted(observed)
        probs = {c: (observed.get(c, 0) + alpha) / denom for c in cands}
    else:
        denom = total + alpha * len(observed)
        probs = {c: (n + alpha) / denom for c, n in sorted(observed.items())}

    mle = max(sorted(probs), key=lambda c: probs[c])  # sorted -> lex smallest tie wins
    return MarkovForecast(probs=probs, mle=mle)
