"""Independent reference implementations used as test oracles.

Everything here is deliberately naive and, where possible, built on a
different code path than the library (full sorts instead of partitions,
scipy special functions instead of hand-rolled softmaxes, per-coordinate
finite differences instead of closed forms) so agreement is meaningful.
"""

from __future__ import annotations

import numpy as np
from scipy.special import logsumexp, rel_entr, softmax


def naive_top_k(data: np.ndarray, ids: list[str], q: np.ndarray, k: int):
    """Full-sort top-k oracle: sim descending, id ascending.

    Returns (ids, sims) for the best min(k, n) rows. Sims use the same
    per-row multiply-then-sum reduction the engine specifies, so score
    comparisons can demand bitwise equality.
    """
    sims = (data.astype(np.float64) * np.asarray(q, dtype=np.float64)).sum(axis=1)
    id_arr = np.asarray(ids, dtype=np.str_)
    order = np.lexsort((id_arr, -sims))[: min(k, len(ids))]
    return [ids[i] for i in order], sims[order]


def central_diff_grad(f, x: np.ndarray, h: float = 1e-4) -> np.ndarray:
    """Per-coordinate central finite differences of a scalar function."""
    x = np.asarray(x, dtype=np.float64)
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2.0 * h)
    return g


def relative_error(approx: np.ndarray, exact: np.ndarray) -> float:
    """L2 relative error with a floor to avoid division blowup at zero."""
    exact = np.asarray(exact, dtype=np.float64)
    num = np.linalg.norm(np.asarray(approx, dtype=np.float64) - exact)
    return float(num / max(np.linalg.norm(exact), 1e-12))


def ref_softmax(scores: np.ndarray, tau: float = 1.0) -> np.ndarray:
    return softmax(np.asarray(scores, dtype=np.float64) / tau)


def ref_loss_hard(q, cand_vecs, hard) -> float:
    """Marginal negative log likelihood via scipy logsumexp."""
    sims = np.asarray(cand_vecs, np.float64) @ np.asarray(q, np.float64)
    idx = sorted(hard)
    return float(logsumexp(sims) - logsumexp(sims[idx]))


def ref_loss_soft(q, cand_vecs, target) -> float:
    """KL divergence via scipy rel_entr."""
    sims = np.asarray(cand_vecs, np.float64) @ np.asarray(q, np.float64)
    return float(rel_entr(np.asarray(target, np.float64), softmax(sims)).sum())


def ref_hard_set(soft: np.ndarray, p: float) -> set[int]:
    """Probability-descending prefix by cumulative sum, ties by position."""
    order = sorted(range(len(soft)), key=lambda i: (-soft[i], i))
    chosen, total = set(), 0.0
    for i in order:
        chosen.add(i)
        total += soft[i]
        if total >= p:
            break
    return chosen


def ref_sgd_step(q, cand_vecs, hard, eta: float) -> np.ndarray:
    """One plain SGD step on the hard objective, spelled out longhand."""
    q = np.asarray(q, dtype=np.float64)
    cand_vecs = np.asarray(cand_vecs, dtype=np.float64)
    sims = cand_vecs @ q
    pk = softmax(sims)
    idx = sorted(hard)
    restricted = softmax(sims[idx])
    grad = pk @ cand_vecs - restricted @ cand_vecs[idx]
    return q - eta * grad


def ref_rocchio(q, cand_vecs, alpha, beta, gamma, k_prime) -> np.ndarray:
    """Direct transcription of the Rocchio update."""
    q = np.asarray(q, dtype=np.float64)
    cand_vecs = np.asarray(cand_vecs, dtype=np.float64)
    rel = cand_vecs[:k_prime]
    nonrel = cand_vecs[k_prime:]
    out = alpha * q + beta * rel.mean(axis=0)
    if len(nonrel):
        out = out - gamma * nonrel.mean(axis=0)
    return out


def ref_momentum_trace(q0, grads, eta, max_iters, momentum, weight_decay):
    """Hand-stepped momentum recurrence over a fixed gradient sequence."""
    q = np.asarray(q0, dtype=np.float64).copy()
    v = np.zeros_like(q)
    trace = [q.copy()]
    for t, g in enumerate(grads):
        eta_t = eta * (max_iters - t) / max_iters
        v = momentum * v + (np.asarray(g, dtype=np.float64) + weight_decay * q)
        q = q - eta_t * v
        trace.append(q.copy())
    return trace
