"""CMA and CMAbatch butterfly equalizers, step-size scheduling, genie CPR.

The equalizer minimizes the Godard p=2 cost ``(|u|^2 - R2)^2`` per output
polarization with ``R2 = E|a|^4 / E|a|^2`` of the active constellation.
``cma_update`` takes one stochastic-gradient step per output symbol;
``cma_batch_update`` averages the gradient over a block and applies a
single update, making its update count comparable to the block-trained
VQ-VAE equalizers.

Genie-aided carrier phase recovery (`genie_cpr`) uses the true symbols to
derotate each block before demapping.  It is a measurement-side fairness
device for the CMA baselines and is never fed back into adaptation.
"""

from bisect import bisect_right
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, NumericalError, ShapeError
from . import kernels

DIVERGENCE_BOUNDS = (1e-6, 1e6)


def constant_modulus_radius(constellation):
    """Godard radius R2 = E|a|^4 / E|a|^2 under the constellation priors."""
    mag2 = np.abs(constellation.points) ** 2
    return float(np.sum(constellation.priors * mag2**2) / np.sum(constellation.priors * mag2))


def make_halving_schedule(mu0, halve_every=2000, floor=1e-5, horizon=100_000):
    """Step-size table halving ``mu0`` every ``halve_every`` updates down to ``floor``."""
    schedule = []
    mu = mu0
    idx = halve_every
    while idx < horizon and mu / 2 >= floor:
        mu = mu / 2
        schedule.append((idx, mu))
        idx += halve_every
    return schedule


def apply_schedule(schedule, mu0, update_index):
    """Piecewise-constant step size: ``mu0`` before the first table entry."""
    if not schedule:
        return mu0
    idx = bisect_right([s[0] for s in schedule], update_index)
    return mu0 if idx == 0 else schedule[idx - 1][1]


@dataclass
class CmaState:
    taps: np.ndarray                     # (2 out, 2 in, L) complex butterfly
    step_size: float
    radius_target: float
    schedule: list = field(default_factory=list)
    sps: int = 2
    update_count: int = 0
    tail: np.ndarray = None              # (2, L-1) input history

    def __post_init__(self):
        if self.taps.shape[:2] != (2, 2) or self.taps.ndim != 3:
            raise ShapeError(f"taps must be (2, 2, L), got {self.taps.shape}")
        if self.step_size <= 0:
            raise ConfigError("step size must be positive")
        idxs = [s[0] for s in self.schedule]
        if any(b <= a for a, b in zip(idxs, idxs[1:])):
            raise ConfigError("schedule indices must be strictly increasing")
        if self.tail is None:
            self.tail = np.zeros((2, self.taps.shape[2] - 1), dtype=complex)

    @classmethod
    def spike_init(cls, constellation, n_taps=32, step_size=1e-3, schedule=None, sps=2):
        """Center-spike butterfly, the same initialization as the VQ-VAE decoder."""
        taps = np.zeros((2, 2, n_taps), dtype=complex)
        taps[0, 0, n_taps // 2] = 1.0
        taps[1, 1, n_taps // 2] = 1.0
        return cls(
            taps=taps,
            step_size=step_size,
            radius_target=constant_modulus_radius(constellation),
            schedule=list(schedule) if schedule else [],
            sps=sps,
        )

    def current_step_size(self):
        return apply_schedule(self.schedule, self.step_size, self.update_count)


def cma_gradient(taps, window, r2):
    """Exact cost gradient for one output symbol.

    ``window`` is (2, L) in ascending time.  Returns ``(outputs, grads)``
    with ``grads[o, i, j] = 4 (|u_o|^2 - r2) u_o conj(window[i, L-1-j])``,
    the packed re/im partials of ``(|u_o|^2 - r2)^2``.
    """
    taps = np.asarray(taps)
    window = np.asarray(window)
    rev = window[:, ::-1]  # rev[i, j] = sample delayed by j
    out = np.einsum("oij,ij->o", taps, rev)
    err = np.abs(out) ** 2 - r2
    grads = 4.0 * (err * out)[:, None, None] * np.conj(rev)[None, :, :]
    return out, grads


def _run(state, r_block, batch, adapt, backend=None):
    r_block = np.asarray(r_block)
    if r_block.ndim != 2 or r_block.shape[0] != 2:
        raise ShapeError("CMA input block must be (2, n)")
    k = kernels if backend is None else kernels.get_backend(backend)
    full = np.concatenate([state.tail, r_block], axis=1)
    full = np.ascontiguousarray(full, dtype=complex)
    L = state.taps.shape[2]
    n_out = (full.shape[1] - L) // state.sps + 1
    if n_out < 1:
        raise ShapeError("block too short for one output symbol")
    w = [np.ascontiguousarray(state.taps[o, i]) for o in range(2) for i in range(2)]
    if not adapt:
        mu = np.zeros(n_out) if not batch else 0.0
    elif batch:
        mu = state.current_step_size()
    else:
        mu = np.array(
            [
                apply_schedule(state.schedule, state.step_size, state.update_count + m)
                for m in range(n_out)
            ]
        )
    fn = k.cma_batch if batch else k.cma_serial
    out_x, out_y = fn(full[0], full[1], w[0], w[1], w[2], w[3], state.radius_target, mu, state.sps)
    for j, (o, i) in enumerate([(0, 0), (0, 1), (1, 0), (1, 1)]):
        state.taps[o, i] = w[j]
    state.tail = full[:, full.shape[1] - (L - 1) :].copy()
    if adapt:
        state.update_count += 1 if batch else n_out
    power = float(np.mean(np.abs(out_x) ** 2 + np.abs(out_y) ** 2)) / 2
    if not (DIVERGENCE_BOUNDS[0] <= power <= DIVERGENCE_BOUNDS[1]):
        raise NumericalError(f"CMA output power {power:.3e} outside {DIVERGENCE_BOUNDS}")
    return np.stack([out_x, out_y])


def cma_update(state, r_window, adapt=True, backend=None):
    """Sample-by-sample CMA over a window; one tap update per output symbol."""
    return _run(state, r_window, batch=False, adapt=adapt, backend=backend), state


def cma_batch_update(state, r_block, adapt=True, backend=None):
    """Block CMA: gradient averaged over the block, one update per block."""
    return _run(state, r_block, batch=True, adapt=adapt, backend=backend), state


def genie_cpr(outputs, truth):
    """Rotate each polarization by the LS-optimal phase against the truth.

    Zero outputs (undefined phase) are returned unrotated.
    """
    outputs = np.asarray(outputs)
    truth = np.asarray(truth)
    if outputs.shape != truth.shape:
        raise ShapeError("outputs and truth must have matching shapes")
    rotated = outputs.copy()
    for p in range(outputs.shape[0]):
        z = np.sum(truth[p] * np.conj(outputs[p]))
        if z != 0:
            rotated[p] = outputs[p] * np.exp(1j * np.angle(z))
    return rotated
