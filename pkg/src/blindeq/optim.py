"""Adam optimizer for lists of complex tap arrays.

Each complex parameter is treated as two independent real parameters, so the
second-moment accumulators are kept separately for the real and imaginary
parts.  Gradients are the packed partials ``dL/d(re) + j dL/d(im)``.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeError


@dataclass
class AdamState:
    first_moment: list = field(default_factory=list)   # complex, packs (m_re, m_im)
    second_moment_re: list = field(default_factory=list)
    second_moment_im: list = field(default_factory=list)
    step_count: int = 0

    @classmethod
    def for_params(cls, params):
        return cls(
            first_moment=[np.zeros(p.shape, dtype=complex) for p in params],
            second_moment_re=[np.zeros(p.shape) for p in params],
            second_moment_im=[np.zeros(p.shape) for p in params],
            step_count=0,
        )


def adam_step(params, grads, state, lr, beta1=0.9, beta2=0.999, eps=1e-8):
    """One in-place Adam update with bias correction.

    ``params`` and ``grads`` are matching lists of complex arrays; returns
    ``state`` with ``step_count`` incremented.
    """
    if len(params) != len(grads) or len(params) != len(state.first_moment):
        raise ShapeError("params, grads, and moments must have equal lengths")
    state.step_count += 1
    t = state.step_count
    c1 = 1.0 - beta1**t
    c2 = 1.0 - beta2**t
    for p, g, m, vr, vi in zip(
        params, grads, state.first_moment, state.second_moment_re, state.second_moment_im
    ):
        if p.shape != g.shape:
            raise ShapeError("gradient shape does not match parameter shape")
        m *= beta1
        m += (1.0 - beta1) * g
        vr *= beta2
        vr += (1.0 - beta2) * g.real**2
        vi *= beta2
        vi += (1.0 - beta2) * g.imag**2
        mh = m / c1
        step = (mh.real / (np.sqrt(vr / c2) + eps)) + 1j * (mh.imag / (np.sqrt(vi / c2) + eps))
        p -= lr * step
    return state
