"""Independent reference implementations the learner tests compare against.

Everything here is deliberately written the slow, obvious way (explicit
inverses, exhaustive enumeration) so a bug in the production code cannot
hide in a shared shortcut.
"""

import numpy as np


def ols_normal_oracle(x, y):
    """Intercept-augmented normal-equation solve; returns (weights, bias)."""
    x = np.asarray(x, dtype=float)
    xa = np.hstack([x, np.ones((x.shape[0], 1))])
    coef = np.linalg.solve(xa.T @ xa, xa.T @ np.asarray(y, dtype=float))
    return coef[:-1], float(coef[-1])


def _rbf_gram(a, b, length_scale, signal_var):
    a = np.atleast_2d(a)
    b = np.atleast_2d(b)
    sq = np.sum((a[:, None, :] - b[None, :, :]) ** 2, axis=2)
    return signal_var * np.exp(-sq / (2.0 * length_scale**2))


def gp_dense_oracle(x_train, y_train, x_query, length_scale, signal_var, noise_var):
    """Posterior (mean, std) via an explicit matrix inverse.

    Mirrors gp_fit's preprocessing: standardize inputs with training
    statistics (constant columns keep scale 1) and subtract the target mean.
    """
    x_train = np.asarray(x_train, dtype=float)
    x_query = np.atleast_2d(np.asarray(x_query, dtype=float))
    y_train = np.asarray(y_train, dtype=float)
    mu = y_train.mean()
    m = x_train.mean(axis=0)
    s = x_train.std(axis=0)
    s = np.where(s > 0, s, 1.0)
    zt = (x_train - m) / s
    zq = (x_query - m) / s
    k = _rbf_gram(zt, zt, length_scale, signal_var) + noise_var * np.eye(len(zt))
    k_inv = np.linalg.inv(k)
    ks = _rbf_gram(zq, zt, length_scale, signal_var)
    mean = ks @ k_inv @ (y_train - mu) + mu
    var = signal_var - np.sum((ks @ k_inv) * ks, axis=1)
    return mean, np.sqrt(np.maximum(var, 0.0))


def gini_split_score(y_left, y_right, n_classes):
    """The quantity CART maximises: sum over children of (sum counts^2)/n."""
    score = 0.0
    for part in (y_left, y_right):
        counts = np.bincount(part, minlength=n_classes)
        score += float(counts @ counts) / len(part)
    return score


def exhaustive_best_split(x, y, min_leaf=1):
    """Brute-force scan of every (feature, midpoint threshold) candidate.

    Returns (best score, list of (feature, threshold) achieving it), or
    (None, []) when no candidate beats leaving the node unsplit.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=int)
    n, d = x.shape
    n_classes = int(y.max()) + 1
    counts = np.bincount(y, minlength=n_classes)
    base = float(counts @ counts) / n
    best_score, best = None, []
    for f in range(d):
        vals = np.unique(x[:, f])
        for lo, hi in zip(vals[:-1], vals[1:]):
            t = 0.5 * (lo + hi)
            mask = x[:, f] <= t
            if mask.sum() < min_leaf or (~mask).sum() < min_leaf:
                continue
            score = gini_split_score(y[mask], y[~mask], n_classes)
            if score <= base + 1e-12:
                continue
            if best_score is None or score > best_score + 1e-12:
                best_score, best = score, [(f, t)]
            elif abs(score - best_score) <= 1e-12:
                best.append((f, t))
    return best_score, best
