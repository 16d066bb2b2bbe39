"""Scikit-learn style wrappers around the channel estimators.

Each estimator consumes pilot observations X of shape (n_slots, 33, 4)
(complex, one LS observation per pilot tone and pilot symbol) and predicts
full-band channel estimates of shape (n_slots, n_f). They follow the
fit/predict and get_params/set_params conventions so they compose with the
wider ecosystem; fitted attributes carry the trailing underscore.
"""

import numpy as np
from sklearn.base import BaseEstimator

from .channel import DEFAULT_HDS_TEMPLATE, DEFAULT_LDS_TEMPLATE
from .classical import estimate_correlations, ls_interpolate, mmse_estimate
from .modem import ModemConfig, default_pattern
from .nn.model import ModelWeights, forward
from .nn.train import TrainConfig, train
from .selector import SelectorBank, adaptive_estimate_batch
from .validation import as_complex_array


def _check_pilot_batch(X, pattern):
    x = as_complex_array(X, name="pilot observations")
    if x.ndim == 2:
        x = x[None]
    want = (pattern.n_pilots, len(pattern.symbol_indices))
    if x.ndim != 3 or x.shape[1:] != want:
        raise ValueError(
            f"pilot observations must have shape (n_slots, {want[0]}, {want[1]})"
        )
    return x


class LeastSquaresEstimator(BaseEstimator):
    """Pilot-averaged LS with linear interpolation to the full band."""

    def __init__(self, n_f=324, l_s=5):
        self.n_f = n_f
        self.l_s = l_s

    def fit(self, X=None, y=None):
        self.pattern_ = default_pattern(ModemConfig(n_f=self.n_f, l_s=self.l_s))
        return self

    def predict(self, X):
        if not hasattr(self, "pattern_"):
            self.fit()
        x = _check_pilot_batch(X, self.pattern_)
        h_ls = x.mean(axis=2)
        return np.stack(
            [ls_interpolate(row, self.pattern_, self.n_f) for row in h_ls]
        )


class MmseChannelEstimator(BaseEstimator):
    """Linear MMSE from ensemble statistics of true channel responses."""

    def __init__(self, n_f=324, l_s=5, noise_var=0.0):
        self.n_f = n_f
        self.l_s = l_s
        self.noise_var = noise_var

    def fit(self, X, y=None):
        """X: (n_samples, n_f) complex ensemble of true channel responses."""
        h = as_complex_array(X, name="channel ensemble")
        if h.ndim != 2 or h.shape[1] != self.n_f:
            raise ValueError(f"ensemble must have shape (n_samples, {self.n_f})")
        self.pattern_ = default_pattern(ModemConfig(n_f=self.n_f, l_s=self.l_s))
        hp = h[:, self.pattern_.tone_indices]
        n = h.shape[0]
        r_hphp = hp.T @ hp.conj() / n
        from .classical import CorrelationSet

        self.correlations_ = CorrelationSet(
            r_hhp=h.T @ hp.conj() / n,
            r_hphp=(r_hphp + r_hphp.conj().T) / 2.0,
            sample_count=n,
        )
        return self

    def set_correlations(self, corr):
        """Adopt precomputed correlation matrices (e.g. loaded from disk)."""
        self.pattern_ = default_pattern(ModemConfig(n_f=self.n_f, l_s=self.l_s))
        self.correlations_ = corr
        return self

    def predict(self, X, noise_var=None):
        if not hasattr(self, "correlations_"):
            raise RuntimeError("MmseChannelEstimator is not fitted")
        x = _check_pilot_batch(X, self.pattern_)
        nv = self.noise_var if noise_var is None else noise_var
        h_ls = x.mean(axis=2)
        return np.stack(
            [mmse_estimate(row, self.correlations_, nv) for row in h_ls]
        )


class NeuralChannelEstimator(BaseEstimator):
    """The compact convolutional estimator with its training recipe."""

    def __init__(
        self,
        hidden=(32, 30),
        lr0=2e-4,
        lr_decay=0.3,
        decay_every=10,
        epochs=100,
        batch_size=64,
        l2=1e-9,
        seed=0,
        val_fraction=0.05,
        norm_scale=None,
    ):
        self.hidden = hidden
        self.lr0 = lr0
        self.lr_decay = lr_decay
        self.decay_every = decay_every
        self.epochs = epochs
        self.batch_size = batch_size
        self.l2 = l2
        self.seed = seed
        self.val_fraction = val_fraction
        self.norm_scale = norm_scale

    def _train_config(self):
        return TrainConfig(
            lr0=self.lr0,
            lr_decay=self.lr_decay,
            decay_every=self.decay_every,
            epochs=self.epochs,
            batch_size=self.batch_size,
            l2=self.l2,
            seed=self.seed,
            val_fraction=self.val_fraction,
            norm_scale=self.norm_scale,
        )

    def fit(self, X, y):
        """X: (n, 33, 4) complex pilot observations; y: (n, n_f) true channels."""
        pilots = as_complex_array(X, name="pilot observations")
        targets = as_complex_array(y, name="true channels")
        widths = (2, *self.hidden, 2)
        self.weights_, self.history_ = train(
            pilots, targets, self._train_config(), widths=widths
        )
        return self

    def set_weights(self, weights):
        """Adopt trained weights (e.g. loaded from a weights file)."""
        if not isinstance(weights, ModelWeights):
            raise TypeError("expected ModelWeights")
        self.weights_ = weights
        return self

    def predict(self, X):
        if not hasattr(self, "weights_"):
            raise RuntimeError("NeuralChannelEstimator is not fitted")
        x = as_complex_array(X, name="pilot observations")
        single = x.ndim == 2
        out = forward(self.weights_, x)
        return out if not single else out[None]


class AdaptiveChannelEstimator(BaseEstimator):
    """Delay-spread adaptive dispatch over three branch networks."""

    def __init__(
        self,
        lds_template=DEFAULT_LDS_TEMPLATE,
        hds_template=DEFAULT_HDS_TEMPLATE,
        l_cp=7,
        net_params=None,
    ):
        self.lds_template = lds_template
        self.hds_template = hds_template
        self.l_cp = l_cp
        self.net_params = net_params

    def fit(self, X, y, labels=None):
        """Train the three branches from a labeled mixed corpus.

        ``labels`` holds the delay-spread class per sample (0 LDS, 1 MDS,
        2 HDS), as produced by the dataset pipeline.
        """
        if labels is None:
            raise ValueError("labels are required to train the branch networks")
        pilots = as_complex_array(X, name="pilot observations")
        targets = as_complex_array(y, name="true channels")
        labels = np.asarray(labels)
        nets = {}
        for cls, name in ((0, "lds"), (1, "mds"), (2, "hds")):
            rows = np.nonzero(labels == cls)[0]
            if rows.size == 0:
                raise ValueError(f"no samples labeled {name.upper()}")
            est = NeuralChannelEstimator(**(self.net_params or {}))
            est.fit(pilots[rows], targets[rows])
            nets[name] = est.weights_
        self.bank_ = SelectorBank(
            lds=nets["lds"],
            mds=nets["mds"],
            hds=nets["hds"],
            lds_template=self.lds_template,
            hds_template=self.hds_template,
            l_cp=self.l_cp,
        )
        return self

    def set_bank(self, bank):
        """Adopt a pre-assembled selector bank."""
        self.bank_ = bank
        return self

    def predict(self, X):
        h, _, _ = self.predict_with_decisions(X)
        return h

    def predict_with_decisions(self, X):
        """Returns (estimates, decisions, reran) for a batch of slots."""
        if not hasattr(self, "bank_"):
            raise RuntimeError("AdaptiveChannelEstimator is not fitted")
        x = as_complex_array(X, name="pilot observations")
        if x.ndim == 2:
            x = x[None]
        return adaptive_estimate_batch(x, self.bank_)
