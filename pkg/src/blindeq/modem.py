"""Constellations, symbol sources, MAP demapping, and SER measurement.

Constellations are unit-mean-power by construction (under their priors).
Shaped constellations put Maxwell-Boltzmann priors ``p_i ~ exp(-lam*|a_i|^2)``
on the square QAM grid, with ``lam`` solved so the prior entropy hits a
target bit rate.

SER measurement resolves the ambiguities a blind equalizer cannot: residual
per-polarization 90-degree rotations, polarization swap, and the equalizer
delay.  The resolving hypothesis is chosen with knowledge of the transmitted
symbols (metric-side genie) and is never fed back into training.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, NumericalError, ShapeError

DEMAP_CHUNK = 8192


@dataclass
class Constellation:
    points: np.ndarray
    priors: np.ndarray
    label: str = ""

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=complex)
        self.priors = np.asarray(self.priors, dtype=float)
        if self.points.ndim != 1 or self.points.shape != self.priors.shape:
            raise ShapeError("points and priors must be 1-D and equal length")
        if np.any(self.priors <= 0):
            raise ConfigError("all priors must be positive")
        if abs(self.priors.sum() - 1.0) > 1e-12:
            raise ConfigError("priors must sum to 1")
        if abs(np.sum(self.priors * np.abs(self.points) ** 2) - 1.0) > 1e-12:
            raise ConfigError("constellation must have unit mean power")
        if len(np.unique(self.points)) != len(self.points):
            raise ConfigError("constellation points must be distinct")

    @property
    def order(self):
        return len(self.points)

    def entropy_bits(self):
        return float(-np.sum(self.priors * np.log2(self.priors)))

    def mean_power(self):
        return float(np.sum(self.priors * np.abs(self.points) ** 2))


def _square_grid(order):
    side = int(round(math.sqrt(order)))
    if side * side != order or side % 2:
        raise ConfigError(f"order {order} is not a square of an even integer")
    levels = np.arange(-(side - 1), side, 2, dtype=float)
    re, im = np.meshgrid(levels, levels, indexing="ij")
    return (re + 1j * im).ravel()


def make_uniform_qam(order):
    """Square QAM with uniform priors, normalized to unit mean power."""
    grid = _square_grid(order)
    priors = np.full(order, 1.0 / order)
    scale = 1.0 / math.sqrt(float(np.mean(np.abs(grid) ** 2)))
    return Constellation(points=grid * scale, priors=priors, label=f"uniform{order}")


def _mb_priors(grid, lam):
    w = np.exp(-lam * np.abs(grid) ** 2)
    return w / w.sum()


def _entropy(p):
    return float(-np.sum(p * np.log2(p)))


def make_pcs_qam(target_entropy_bits, base_qam_order=64, max_iter=200):
    """Maxwell-Boltzmann shaped square QAM hitting a target prior entropy.

    The shaping exponent acts on the unnormalized odd-integer grid; points
    are rescaled to unit mean power under the shaped priors afterwards.
    """
    grid = _square_grid(base_qam_order)
    h_max = math.log2(base_qam_order)
    if not h_max / 2 < target_entropy_bits <= h_max:
        raise ConfigError(
            f"target entropy {target_entropy_bits} infeasible for order"
            f" {base_qam_order}: must be in ({h_max / 2}, {h_max}]"
        )
    label = f"pcs{base_qam_order}-{target_entropy_bits:g}b"
    if abs(target_entropy_bits - h_max) < 1e-9:
        priors = np.full(base_qam_order, 1.0 / base_qam_order)
    else:
        lo = 0.0
        hi = 1e-3
        while _entropy(_mb_priors(grid, hi)) > target_entropy_bits:
            hi *= 2
            if hi > 1e6:
                raise NumericalError("failed to bracket the shaping exponent")
        lam = hi
        for _ in range(max_iter):
            lam = 0.5 * (lo + hi)
            h = _entropy(_mb_priors(grid, lam))
            if abs(h - target_entropy_bits) < 1e-12:
                break
            if h > target_entropy_bits:
                lo = lam
            else:
                hi = lam
        priors = _mb_priors(grid, lam)
        if abs(_entropy(priors) - target_entropy_bits) > 1e-6:
            raise NumericalError("entropy bisection did not converge")
    scale = 1.0 / math.sqrt(float(np.sum(priors * np.abs(grid) ** 2)))
    return Constellation(points=grid * scale, priors=priors, label=label)


def draw_symbols(constellation, n, rng_seed):
    """Draw ``n`` i.i.d. symbols from the constellation priors."""
    if n <= 0:
        raise ConfigError("n must be positive")
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    idx = rng.choice(constellation.order, size=n, p=constellation.priors)
    return constellation.points[idx]


def map_demap_indices(values, constellation, noise_var):
    """Index of the MAP decision ``argmax_i log p_i - |v - a_i|^2 / noise_var``.

    Ties resolve to the lowest point index.  With uniform priors this is
    nearest-point slicing for any positive noise variance.
    """
    if noise_var <= 0:
        raise ConfigError("noise_var must be positive")
    values = np.asarray(values)
    flat = values.ravel()
    out = np.empty(flat.shape, dtype=np.int64)
    logp = np.log(constellation.priors)
    pts = constellation.points
    for start in range(0, len(flat), DEMAP_CHUNK):
        chunk = flat[start : start + DEMAP_CHUNK]
        metric = logp - np.abs(chunk[:, None] - pts[None, :]) ** 2 / noise_var
        out[start : start + DEMAP_CHUNK] = np.argmax(metric, axis=1)
    return out.reshape(values.shape)


def map_demap(values, constellation, noise_var):
    """MAP symbol decisions (constellation point values)."""
    return constellation.points[map_demap_indices(values, constellation, noise_var)]


@dataclass
class SerReport:
    symbol_errors: int
    symbols_counted: int
    ser: float
    resolved_rotation_deg: tuple
    resolved_pol_swap: bool
    resolved_delay: tuple
    converged: bool


_ROTATIONS = (1.0 + 0j, 1j, -1.0 + 0j, -1j)
_ROT_DEG = (0, 90, 180, 270)


def measure_ser(decided, truth, skip_first=0, delay_window=32):
    """Count symbol errors after resolving blind-equalizer ambiguities.

    Searches polarization swap, per-polarization 90-degree rotations, and a
    per-polarization delay within ``+/- delay_window`` symbols, and keeps the
    hypothesis with the fewest errors.  Both streams must hold exact
    constellation point values from the same constellation; comparisons are
    exact (rotation by j maps grid points onto grid points bitwise).
    """
    decided = np.asarray(decided)
    truth = np.asarray(truth)
    if decided.ndim != 2 or decided.shape[0] != 2 or truth.shape[0] != 2:
        raise ShapeError("decided and truth must be (2, n) streams")
    n = min(decided.shape[1], truth.shape[1])
    w = delay_window
    lo = skip_first + w
    hi = n - w
    if hi - lo < 16:
        raise ShapeError("streams too short for the delay search window")

    best = None  # (errors, swap, pol-tuple of (rot_idx, delay))
    for swap in (False, True):
        total = 0
        choice = []
        for p in range(2):
            tp = truth[1 - p] if swap else truth[p]
            rotated = [rot * decided[p, lo:hi] for rot in _ROTATIONS]
            best_pol = None
            for d in range(-w, w + 1):
                ref = tp[lo - d : hi - d]
                for ri in range(len(_ROTATIONS)):
                    errs = int(np.count_nonzero(rotated[ri] != ref))
                    if best_pol is None or errs < best_pol[0]:
                        best_pol = (errs, ri, d)
            total += best_pol[0]
            choice.append(best_pol)
        if best is None or total < best[0]:
            best = (total, swap, tuple(choice))

    counted = 2 * (hi - lo)
    ser = best[0] / counted
    return SerReport(
        symbol_errors=best[0],
        symbols_counted=counted,
        ser=ser,
        resolved_rotation_deg=tuple(_ROT_DEG[c[1]] for c in best[2]),
        resolved_pol_swap=best[1],
        resolved_delay=tuple(c[2] for c in best[2]),
        converged=ser < 0.9,
    )


def theoretical_ser_qam(order, snr_db):
    """Closed-form square-QAM symbol error probability at Es/N0 = snr_db."""
    side = int(round(math.sqrt(order)))
    if side * side != order:
        raise ConfigError(f"order {order} is not square")
    snr = 10 ** (snr_db / 10)
    arg = math.sqrt(3 * snr / (order - 1))
    q = 0.5 * math.erfc(arg / math.sqrt(2))
    p_axis = 2 * (1 - 1 / side) * q
    return 1 - (1 - p_axis) ** 2
