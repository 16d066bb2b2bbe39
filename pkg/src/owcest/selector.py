"""Adaptive estimator: pre-estimate, delay-spread classification, dispatch.

The slot is first estimated with the high-delay-spread network (the branch
with the strongest generalization). The magnitude profile of that estimate's
impulse response is compared against the LDS/HDS templates; if the tail sits
strictly below a template the matching branch network re-estimates the slot,
otherwise the pre-estimate is kept. At most two network evaluations plus one
inverse FFT are spent per slot.
"""

from dataclasses import dataclass

import numpy as np

from .channel import DelayClass, PdpTemplate, classify_tail
from .nn.model import ModelWeights, forward


@dataclass(frozen=True)
class SelectorBank:
    """The three branch networks plus the classification templates."""

    lds: ModelWeights
    mds: ModelWeights
    hds: ModelWeights
    lds_template: PdpTemplate
    hds_template: PdpTemplate
    l_cp: int = 7

    def __post_init__(self):
        lo, hi = self.lds_template.tail, self.hds_template.tail
        if lo.size != hi.size:
            raise ValueError("templates must have equal tail lengths")
        if not (hi > lo).all():
            raise ValueError(
                "HDS tail thresholds must exceed LDS thresholds on every tap"
            )
        if self.l_cp < lo.size:
            raise ValueError("l_cp must cover the template tail taps")

    def net(self, decision):
        return {
            DelayClass.LDS: self.lds,
            DelayClass.MDS: self.mds,
            DelayClass.HDS: self.hds,
        }[decision]


def estimate_cir_magnitudes(h_dnn, l_cp):
    """Tail-tap magnitudes |h(1)| .. |h(l_cp)| of the estimated response.

    Works on one length-n_f estimate or a batch (B, n_f); the LOS tap is
    excluded.
    """
    h = np.asarray(h_dnn)
    if h.shape[-1] <= l_cp:
        raise ValueError("l_cp must be smaller than the band length")
    taps = np.fft.ifft(h, axis=-1)
    return np.abs(taps[..., 1 : l_cp + 1])


def classify(mags, bank):
    """Hard-decision delay-spread class of a tail-magnitude profile."""
    return classify_tail(mags, bank.lds_template, bank.hds_template)


def adaptive_estimate(pilot_ls, bank):
    """Estimate one slot adaptively: returns (h_est, decision, reran).

    ``reran`` reports whether a branch network was invoked after the
    pre-estimate (it is False when the pre-estimate is kept).
    """
    h0 = forward(bank.hds, pilot_ls)
    mags = estimate_cir_magnitudes(h0, bank.l_cp)
    decision = classify(mags, bank)
    if decision == DelayClass.HDS:
        return h0, decision, False
    return forward(bank.net(decision), pilot_ls), decision, True


def adaptive_estimate_batch(pilot_ls, bank, chunk=512):
    """Vectorized adaptive estimation over a batch of slots.

    Returns (h_est (B, n_f), decisions (B,), reran (B,)).
    """
    pilots = np.asarray(pilot_ls)
    h = forward(bank.hds, pilots, chunk=chunk)
    mags = estimate_cir_magnitudes(h, bank.l_cp)
    lo, hi = bank.lds_template.tail, bank.hds_template.tail
    below_l = (mags[:, : lo.size] < lo).all(axis=1)
    below_h = (mags[:, : hi.size] < hi).all(axis=1)
    decisions = np.full(pilots.shape[0], int(DelayClass.HDS), dtype=np.uint8)
    decisions[below_h] = int(DelayClass.MDS)
    decisions[below_l] = int(DelayClass.LDS)
    reran = decisions != int(DelayClass.HDS)
    for cls, net in ((DelayClass.LDS, bank.lds), (DelayClass.MDS, bank.mds)):
        rows = np.nonzero(decisions == int(cls))[0]
        if rows.size:
            h[rows] = forward(net, pilots[rows], chunk=chunk)
    return h, decisions, reran
