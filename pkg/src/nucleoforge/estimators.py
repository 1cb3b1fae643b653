"""scikit-learn transformer wrappers for use inside ``Pipeline`` objects.

Both transformers are stateless: ``fit`` only validates hyperparameters.
``X`` is a sequence (or 3-D array) of 2-D maps; the output is a stacked
``(n, H, W)`` array.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .segmentation import watershed_split
from .topo import distance_map, encode_skeleton_map, skeleton_map


class SkeletonMapTransformer(TransformerMixin, BaseEstimator):
    """Label maps to skeleton maps.

    Parameters
    ----------
    encode : bool, default=False
        Return the 8-bit encoding instead of float values in [0, 2].
    distance_only : bool, default=False
        Return the normalized distance map without the skeleton term.
    """

    def __init__(self, encode=False, distance_only=False):
        self.encode = encode
        self.distance_only = distance_only

    def fit(self, X, y=None):
        self.n_features_in_ = 1
        return self

    def transform(self, X):
        f = distance_map if self.distance_only else skeleton_map
        out = np.stack([f(x) for x in X])
        if self.encode and not self.distance_only:
            return encode_skeleton_map(out)
        return out


class WatershedSplitter(TransformerMixin, BaseEstimator):
    """Binary masks to instance label maps via :func:`watershed_split`."""

    def __init__(self, h=1.0):
        self.h = h

    def fit(self, X, y=None):
        if not self.h > 0:
            raise ValueError("h must be positive")
        self.n_features_in_ = 1
        return self

    def transform(self, X):
        return np.stack([watershed_split(x, self.h) for x in X])
