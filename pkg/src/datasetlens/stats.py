"""Self-contained statistical primitives used by every metric module.

All randomized operations take an explicit seed and are deterministic given
it; nothing here reads global RNG state.
"""

from __future__ import annotations

import hashlib
import math
from bisect import bisect_left
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy.stats import norm, rankdata

# Shared defaults (also surfaced through RunConfig; metric code never hides
# different values).
DEFAULT_SVM_LAMBDA = 1e-4
DEFAULT_SVM_EPOCHS = 100
DEFAULT_SVM_HOLDOUT = 0.3
DEFAULT_SHUFFLE_TRIALS = 5
DEFAULT_CONFIDENCE = 0.95
EXACT_RANKSUM_LIMIT = 400


def rng_for(seed: int, *tokens: object) -> np.random.Generator:
    """Generator keyed on (seed, tokens) so per-category work is independent of
    thread schedule and iteration order."""
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF]
    for tok in tokens:
        digest = hashlib.sha256(repr(tok).encode("utf-8")).digest()
        entropy.append(int.from_bytes(digest[:8], "big"))
    return np.random.default_rng(np.random.SeedSequence(entropy))


# -- entropy -------------------------------------------------------------------

class EntropyResult(NamedTuple):
    bits: float
    normalized: float


def entropy(counts: Sequence[int]) -> EntropyResult:
    """Shannon entropy (base 2) of a count vector.

    ``normalized`` divides by log2 of the number of groups the vector could
    populate (its length), so a uniform vector scores 1.0. A single-group
    vector has no diversity to measure and normalizes to 0.0.
    """
    arr = np.asarray(counts, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("counts must be a nonempty 1-D sequence")
    if np.any(arr < 0):
        raise ValueError("counts must be nonnegative")
    total = arr.sum()
    if total == 0:
        raise ValueError("at least one count must be positive")
    p = arr[arr > 0] / total
    bits = float(-(p * np.log2(p)).sum())
    capacity = math.log2(arr.size) if arr.size > 1 else 0.0
    normalized = bits / capacity if capacity > 0 else 0.0
    return EntropyResult(bits=bits, normalized=normalized)


# -- quantile binning ----------------------------------------------------------

BIN_LABELS_5 = ("XS", "S", "M", "L", "XL")


@dataclass(frozen=True)
class QuantileBinning:
    """Equal-population binning fit on a sample.

    Edges are nearest-rank sample quantiles at i/k. Assignment puts a value
    equal to an edge into the lower bin, so re-binning the defining sample
    yields populations differing by at most one (ties permitting).
    """

    k: int
    edges: tuple[float, ...]
    degenerate: bool
    n_fit: int

    @property
    def labels(self) -> tuple[str, ...]:
        if self.k == 5:
            return BIN_LABELS_5
        return tuple(f"bin{i + 1}" for i in range(self.k))

    def assign(self, value: float) -> int:
        return bisect_left(self.edges, value)

    def assign_label(self, value: float) -> str:
        return self.labels[self.assign(value)]

    def counts(self, values: Sequence[float]) -> list[int]:
        out = [0] * self.k
        for v in values:
            out[self.assign(v)] += 1
        return out


def fit_quantile_bins(values: Sequence[float], k: int = 5) -> QuantileBinning:
    """Fit k equal-population bins; degenerate (non-increasing) edges are
    reported via the ``degenerate`` flag rather than raised."""
    if k < 2:
        raise ValueError("k must be >= 2")
    vals = sorted(float(v) for v in values)
    n = len(vals)
    if n == 0:
        raise ValueError("values must be nonempty")
    edges = []
    for i in range(1, k):
        rank = math.ceil(i * n / k)  # nearest-rank quantile, 1-based
        edges.append(vals[max(rank, 1) - 1])
    degenerate = any(b <= a for a, b in zip(edges, edges[1:]))
    return QuantileBinning(k=k, edges=tuple(edges), degenerate=degenerate, n_fit=n)


# -- binomial proportion -------------------------------------------------------

def wilson_lower(successes: int, trials: int, confidence: float = DEFAULT_CONFIDENCE) -> float:
    """Lower bound of the Wilson score interval for a binomial proportion."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if not 0 <= successes <= trials:
        raise ValueError("successes must lie in [0, trials]")
    if not 0 < confidence < 1:
        raise ValueError("confidence must lie in (0, 1)")
    z = norm.ppf(1 - (1 - confidence) / 2)
    n = trials
    phat = successes / n
    denom = 1 + z * z / n
    center = (phat + z * z / (2 * n)) / denom
    margin = (z / denom) * math.sqrt(phat * (1 - phat) / n + z * z / (4 * n * n))
    return max(0.0, center - margin)


# -- significance tests --------------------------------------------------------

@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    test_name: str
    n1: int
    n2: int


def two_proportion_test(k1: int, n1: int, k2: int, n2: int) -> TestResult:
    """Pooled two-sided z-test for equality of two binomial proportions."""
    if n1 < 1 or n2 < 1:
        raise ValueError("both sample sizes must be >= 1")
    if not (0 <= k1 <= n1 and 0 <= k2 <= n2):
        raise ValueError("successes must lie within their trial counts")
    p1, p2 = k1 / n1, k2 / n2
    pooled = (k1 + k2) / (n1 + n2)
    se = math.sqrt(pooled * (1 - pooled) * (1 / n1 + 1 / n2))
    if se == 0:
        z = 0.0
    else:
        z = (p1 - p2) / se
    p_value = 2 * norm.cdf(-abs(z))
    return TestResult(
        statistic=float(z),
        p_value=float(min(1.0, p_value)),
        test_name="two-proportion-z",
        n1=n1,
        n2=n2,
    )


def _exact_u_cdf(n1: int, n2: int, u: int) -> float:
    """P(U <= u) under the Mann-Whitney null, via the classical counting
    recurrence (valid without ties)."""
    max_u = n1 * n2
    if u < 0:
        return 0.0
    u = int(min(u, max_u))
    # f[i][j][v]: arrangements of i x's and j y's with U=v, computed with a
    # rolling table over j.
    prev = [np.zeros(max_u + 1) for _ in range(n1 + 1)]
    for i in range(n1 + 1):
        prev[i][0] = 1.0  # j = 0: only U = 0
    for j in range(1, n2 + 1):
        cur = [np.zeros(max_u + 1) for _ in range(n1 + 1)]
        cur[0][0] = 1.0
        for i in range(1, n1 + 1):
            # last element is either an x (adds j to U) or a y (adds nothing)
            shifted = np.zeros(max_u + 1)
            shifted[j:] = cur[i - 1][: max_u + 1 - j]
            cur[i] = shifted + prev[i]
        prev = cur
    dist = prev[n1]
    total = dist.sum()
    return float(dist[: u + 1].sum() / total)


def rank_sum_test(
    xs: Sequence[float], ys: Sequence[float], alternative: str = "two-sided"
) -> TestResult:
    """Mann-Whitney U test.

    Statistic is U for the first sample (count of pairs where x > y, ties at
    half weight). Exact null distribution is used when there are no ties and
    n1*n2 <= 400; otherwise a tie-corrected normal approximation with
    continuity correction.
    """
    if alternative not in ("two-sided", "less", "greater"):
        raise ValueError(f"unknown alternative {alternative!r}")
    x = np.asarray(list(xs), dtype=float)
    y = np.asarray(list(ys), dtype=float)
    if x.size == 0 or y.size == 0:
        raise ValueError("both samples must be nonempty")
    n1, n2 = x.size, y.size
    combined = np.concatenate([x, y])
    ranks = rankdata(combined)
    r1 = ranks[:n1].sum()
    u1 = float(r1 - n1 * (n1 + 1) / 2)

    has_ties = len(np.unique(combined)) < combined.size
    if not has_ties and n1 * n2 <= EXACT_RANKSUM_LIMIT:
        u_int = int(round(u1))
        p_less = _exact_u_cdf(n1, n2, u_int)
        p_greater = 1.0 - _exact_u_cdf(n1, n2, u_int - 1)
        name = "mann-whitney-u-exact"
    else:
        mean = n1 * n2 / 2
        n = n1 + n2
        _, tie_counts = np.unique(combined, return_counts=True)
        tie_term = float(((tie_counts**3 - tie_counts).sum()) / (n * (n - 1))) if n > 1 else 0.0
        var = n1 * n2 / 12 * ((n + 1) - tie_term)
        if var <= 0:
            p_less = p_greater = 1.0
        else:
            sd = math.sqrt(var)
            p_less = norm.cdf((u1 - mean + 0.5) / sd)
            p_greater = norm.sf((u1 - mean - 0.5) / sd)
        name = "mann-whitney-u-normal"

    if alternative == "less":
        p = p_less
    elif alternative == "greater":
        p = p_greater
    else:
        p = min(1.0, 2 * min(p_less, p_greater))
    return TestResult(statistic=u1, p_value=float(p), test_name=name, n1=n1, n2=n2)


def benjamini_hochberg(p_values: Sequence[float], alpha: float = 0.05) -> tuple[list[bool], list[float]]:
    """Step-up FDR correction; returns (rejected flags, adjusted p-values)."""
    p = np.asarray(list(p_values), dtype=float)
    m = p.size
    if m == 0:
        return [], []
    order = np.argsort(p, kind="stable")
    adjusted = np.empty(m, dtype=float)
    running = 1.0
    for rank_idx in range(m - 1, -1, -1):
        i = order[rank_idx]
        running = min(running, p[i] * m / (rank_idx + 1))
        adjusted[i] = running
    rejected = adjusted <= alpha
    return rejected.tolist(), adjusted.tolist()


# -- random projection ---------------------------------------------------------

def default_projection_dim(n_samples: int) -> int:
    """sqrt(number of samples), floored; the anti-overfitting projection size."""
    return max(1, int(math.isqrt(max(n_samples, 1))))


def random_projection(
    vectors: np.ndarray,
    out_dim: int | None = None,
    seed: int = 0,
    identity_if_same_dim: bool = False,
) -> np.ndarray:
    """Seeded Gaussian projection, scaled by 1/sqrt(out_dim).

    ``out_dim`` defaults to floor(sqrt(n_samples)). With
    ``identity_if_same_dim`` and out_dim == input dim, the input is returned
    unchanged.
    """
    X = np.asarray(vectors, dtype=float)
    if X.ndim != 2:
        raise ValueError("vectors must be a 2-D array")
    n, d = X.shape
    if out_dim is None:
        out_dim = default_projection_dim(n)
    if out_dim > d:
        raise ValueError(f"out_dim {out_dim} exceeds input dimension {d}")
    if out_dim < 1:
        raise ValueError("out_dim must be >= 1")
    if identity_if_same_dim and out_dim == d:
        return X.copy()
    rng = np.random.default_rng(seed)
    basis = rng.standard_normal((d, out_dim)) / math.sqrt(out_dim)
    return X @ basis


# -- linear SVM (Pegasos-style subgradient) -------------------------------------

@dataclass(frozen=True, eq=False)
class LinearModel:
    """Binary linear classifier with its training record.

    ``classes`` maps decision sign to the original labels: negative margin
    predicts classes[0], positive predicts classes[1].
    """

    weights: np.ndarray
    bias: float
    classes: tuple
    lam: float
    epochs: int
    seed: int
    holdout: float
    heldout_accuracy: float
    n_train: int
    n_test: int
    objective_history: tuple[float, ...]

    def decision(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        return X @ self.weights + self.bias

    def predict(self, X: np.ndarray) -> np.ndarray:
        margins = self.decision(X)
        out = np.where(margins >= 0, 1, 0)
        return np.asarray([self.classes[i] for i in out])


def _hinge_objective(w: np.ndarray, b: float, X: np.ndarray, y: np.ndarray, lam: float) -> float:
    margins = 1 - y * (X @ w + b)
    return float(lam / 2 * (w @ w) + np.maximum(margins, 0).mean())


def _pegasos(
    X: np.ndarray, y: np.ndarray, lam: float, epochs: int, rng: np.random.Generator
) -> tuple[np.ndarray, float, list[float]]:
    """Core subgradient loop on labels in {-1, +1}.

    Returns the best iterate seen at any epoch boundary (lowest regularized
    hinge objective), so the recorded objective history is non-increasing.
    """
    n, d = X.shape
    w = np.zeros(d)
    b = 0.0
    radius = 1.0 / math.sqrt(lam)
    t = 0
    best = (math.inf, w.copy(), b)
    history: list[float] = []
    for _ in range(epochs):
        for i in rng.permutation(n):
            t += 1
            eta = 1.0 / (lam * t)
            margin = y[i] * (X[i] @ w + b)
            w *= 1.0 - eta * lam
            if margin < 1:
                w += eta * y[i] * X[i]
                b += eta * y[i]
            wnorm = math.sqrt(w @ w)
            if wnorm > radius:
                w *= radius / wnorm
        obj = _hinge_objective(w, b, X, y, lam)
        if obj < best[0]:
            best = (obj, w.copy(), b)
        history.append(best[0])
    return best[1], best[2], history


def _stratified_split(
    y: np.ndarray, holdout: float, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    test_idx: list[int] = []
    train_idx: list[int] = []
    for cls in np.unique(y):
        members = np.flatnonzero(y == cls)
        members = members[rng.permutation(members.size)]
        n_test = int(round(members.size * holdout))
        n_test = min(max(n_test, 1), members.size - 1)
        test_idx.extend(members[:n_test])
        train_idx.extend(members[n_test:])
    return np.sort(np.asarray(train_idx)), np.sort(np.asarray(test_idx))


def train_linear_svm(
    X: np.ndarray,
    y: Sequence,
    lam: float = DEFAULT_SVM_LAMBDA,
    epochs: int = DEFAULT_SVM_EPOCHS,
    seed: int = 0,
    holdout: float = DEFAULT_SVM_HOLDOUT,
) -> LinearModel:
    """Train a binary linear SVM by Pegasos-style subgradient descent.

    Labels may be any two distinct values; a stratified holdout split (seeded)
    provides the reported held-out accuracy.
    """
    X = np.asarray(X, dtype=float)
    y_arr = np.asarray(list(y))
    if X.ndim != 2 or X.shape[0] != y_arr.size:
        raise ValueError("X must be n x d with one label per row")
    classes = tuple(sorted(np.unique(y_arr).tolist()))
    if len(classes) != 2:
        raise ValueError(f"need exactly two classes, got {len(classes)}")
    if X.shape[0] < 4:
        raise ValueError("need at least 4 samples")
    signs = np.where(y_arr == classes[1], 1.0, -1.0)
    if min((signs == 1).sum(), (signs == -1).sum()) < 2:
        raise ValueError("each class needs at least 2 samples")

    rng = np.random.default_rng(seed)
    train_idx, test_idx = _stratified_split(signs, holdout, rng)
    w, b, history = _pegasos(X[train_idx], signs[train_idx], lam, epochs, rng)
    margins = X[test_idx] @ w + b
    predictions = np.where(margins >= 0, 1.0, -1.0)
    accuracy = float((predictions == signs[test_idx]).mean())
    return LinearModel(
        weights=w,
        bias=float(b),
        classes=classes,
        lam=lam,
        epochs=epochs,
        seed=seed,
        holdout=holdout,
        heldout_accuracy=accuracy,
        n_train=int(train_idx.size),
        n_test=int(test_idx.size),
        objective_history=tuple(history),
    )


@dataclass(frozen=True)
class ShuffledBaseline:
    true_accuracy: float
    shuffled_mean_accuracy: float
    ratio: float
    shuffled_accuracies: tuple[float, ...]


def shuffled_baseline_ratio(
    X: np.ndarray,
    y: Sequence,
    trials: int = DEFAULT_SHUFFLE_TRIALS,
    seed: int = 0,
    lam: float = DEFAULT_SVM_LAMBDA,
    epochs: int = DEFAULT_SVM_EPOCHS,
    holdout: float = DEFAULT_SVM_HOLDOUT,
) -> ShuffledBaseline:
    """Held-out accuracy of the true labeling over the mean accuracy across
    label-permutation retrainings; a ratio near 1 means no learnable signal."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    y_arr = np.asarray(list(y))
    true_model = train_linear_svm(X, y_arr, lam=lam, epochs=epochs, seed=seed, holdout=holdout)
    shuffled: list[float] = []
    for trial in range(trials):
        rng = rng_for(seed, "shuffle", trial)
        permuted = y_arr[rng.permutation(y_arr.size)]
        model = train_linear_svm(
            X, permuted, lam=lam, epochs=epochs,
            seed=int(rng.integers(0, 2**31 - 1)), holdout=holdout,
        )
        shuffled.append(model.heldout_accuracy)
    mean_shuffled = float(np.mean(shuffled))
    ratio = math.inf if mean_shuffled == 0 else true_model.heldout_accuracy / mean_shuffled
    return ShuffledBaseline(
        true_accuracy=true_model.heldout_accuracy,
        shuffled_mean_accuracy=mean_shuffled,
        ratio=float(ratio),
        shuffled_accuracies=tuple(shuffled),
    )


# -- one-vs-rest multiclass (only consumer: the 17-way subregion task) ----------

@dataclass(frozen=True, eq=False)
class MulticlassResult:
    classes: tuple
    overall_accuracy: float
    per_class_accuracy: dict
    confusion: dict
    test_indices: np.ndarray
    test_margins: np.ndarray  # n_test x n_classes decision values
    predictions: np.ndarray


def train_one_vs_rest(
    X: np.ndarray,
    labels: Sequence,
    lam: float = DEFAULT_SVM_LAMBDA,
    epochs: int = DEFAULT_SVM_EPOCHS,
    seed: int = 0,
    holdout: float = DEFAULT_SVM_HOLDOUT,
) -> MulticlassResult:
    """One-vs-rest linear classifiers over a shared stratified split; predicted
    class is the argmax decision value."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(list(labels))
    classes = tuple(sorted(np.unique(y).tolist()))
    if len(classes) < 2:
        raise ValueError("need at least two classes")
    class_index = {c: i for i, c in enumerate(classes)}
    y_idx = np.asarray([class_index[v] for v in y])
    rng = np.random.default_rng(seed)
    train_idx, test_idx = _stratified_split(y_idx, holdout, rng)

    margins = np.zeros((test_idx.size, len(classes)))
    for ci, cls in enumerate(classes):
        signs = np.where(y_idx[train_idx] == ci, 1.0, -1.0)
        cls_rng = rng_for(seed, "ovr", str(cls))
        w, b, _ = _pegasos(X[train_idx], signs, lam, epochs, cls_rng)
        margins[:, ci] = X[test_idx] @ w + b

    predicted = margins.argmax(axis=1)
    actual = y_idx[test_idx]
    overall = float((predicted == actual).mean())
    per_class: dict = {}
    confusion: dict = {}
    for ci, cls in enumerate(classes):
        mask = actual == ci
        per_class[cls] = float((predicted[mask] == ci).mean()) if mask.any() else 0.0
        row: dict = {}
        for cj, other in enumerate(classes):
            n = int(((actual == ci) & (predicted == cj)).sum())
            if n:
                row[other] = n
        confusion[cls] = row
    return MulticlassResult(
        classes=classes,
        overall_accuracy=overall,
        per_class_accuracy=per_class,
        confusion=confusion,
        test_indices=test_idx,
        test_margins=margins,
        predictions=np.asarray([classes[i] for i in predicted]),
    )
