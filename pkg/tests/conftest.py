import numpy as np

from reserveopt.data import AuctionDataset


def make_dataset(features, b1, b2, item_ids=None):
    """Dataset from raw feature rows (offset column appended here)."""
    features = np.atleast_2d(np.asarray(features, float))
    X = np.hstack([features, np.ones((features.shape[0], 1))])
    return AuctionDataset(X, b1, b2, item_ids)


def offset_only_dataset(b1, b2):
    """Feature-free records: the offset coordinate is the whole feature vector."""
    b1 = np.asarray(b1, float)
    return AuctionDataset(np.ones((b1.size, 1)), b1, np.asarray(b2, float))


def random_bids(rng, m, scale=1.0):
    a = rng.lognormal(0.3, 0.7, m) * scale
    b = rng.lognormal(0.3, 0.7, m) * scale
    return np.maximum(a, b), np.minimum(a, b)


def random_feature_dataset(rng, m, d):
    """Features correlated with the bids so learners have signal."""
    F = rng.standard_normal((m, d))
    w_true = rng.standard_normal(d)
    score = np.abs(F @ w_true) + 0.5
    noise = rng.uniform(0.6, 1.0, m)
    b1 = score
    b2 = score * noise
    return make_dataset(F, b1, b2)
