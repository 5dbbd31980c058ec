"""Dual-polarization linear fiber channel: PMD rotation, DGD, residual CD, AWGN.

The channel is a 2x2 frequency response

    H(f) = R^T diag(exp(+j pi tau f), exp(-j pi tau f)) R * exp(-j 2 pi^2 beta L_cd f^2)

with R the rotation of the reference polarization by ``gamma`` and
``tau = d_pmd * sqrt(length)`` the differential group delay between the two
principal states.  The PMD part is unitary at every frequency and the CD
factor is all-pass, so the channel preserves energy.

SNR convention: ``snr_db`` is Es/N0 per polarization at the symbol rate.
With mean per-sample signal power P measured at ``sps`` samples/symbol, the
complex noise variance per sample is ``P * sps / 10**(snr_db/10)`` (half per
real dimension).  A matched filter with unit-energy taps then sees symbol
SNR equal to ``snr_db`` exactly; the closed-form QAM SER in
:mod:`blindeq.modem` uses the same convention.
"""

from dataclasses import dataclass, field

import numpy as np

from .dsp import is_pow2
from .errors import ConfigError, ShapeError

PS = 1e-12  # picoseconds in seconds


@dataclass
class ChannelConfig:
    """Fiber and noise parameters.

    gamma: polarization rotation angle [rad]
    d_pmd: PMD parameter [ps/sqrt(km)]
    fiber_length_km: PMD-accumulating length L [km]
    beta: group-velocity dispersion [ps^2/km]
    l_cd_km: residual uncompensated length for CD [km]
    snr_db: per-polarization Es/N0 at the symbol rate [dB]; ``None`` = noiseless
    symbol_rate_gbaud: symbol rate [GBaud]
    sps: samples per symbol (fixed at 2)
    """

    gamma: float = np.pi / 10
    d_pmd: float = 0.2
    fiber_length_km: float = 1000.0
    beta: float = -21.7
    l_cd_km: float = 4.0
    snr_db: float | None = 18.0
    symbol_rate_gbaud: float = 90.0
    sps: int = 2

    def __post_init__(self):
        if self.fiber_length_km < 0 or self.l_cd_km < 0 or self.d_pmd < 0:
            raise ConfigError("lengths and d_pmd must be non-negative")
        if self.sps != 2:
            raise ConfigError("only 2 samples/symbol is supported")

    @property
    def dgd_s(self):
        """Differential group delay tau = d_pmd * sqrt(L), in seconds."""
        return self.d_pmd * np.sqrt(self.fiber_length_km) * PS

    @property
    def sample_rate_hz(self):
        return self.symbol_rate_gbaud * 1e9 * self.sps


@dataclass
class FrequencyResponse2x2:
    """2x2 channel matrix sampled on an FFT frequency grid.

    ``h`` has shape (2, 2, n): ``h[0, 0]`` = xx, ``h[0, 1]`` = xy, etc.
    """

    h: np.ndarray
    freq_grid: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.h.shape != (2, 2, len(self.freq_grid)):
            raise ShapeError(f"response shape {self.h.shape} does not match grid")

    @classmethod
    def identity(cls, n, sample_rate_hz=1.0):
        grid = np.fft.fftfreq(n, d=1.0 / sample_rate_hz)
        h = np.zeros((2, 2, n), dtype=complex)
        h[0, 0] = 1.0
        h[1, 1] = 1.0
        return cls(h=h, freq_grid=grid)


def build_channel_response(cfg, fft_size):
    """Evaluate H(f) on the ``fft_size``-point FFT grid of the sample rate."""
    if not is_pow2(fft_size):
        raise ConfigError(f"FFT size must be a power of two, got {fft_size}")
    f = np.fft.fftfreq(fft_size, d=1.0 / cfg.sample_rate_hz)
    tau = cfg.dgd_s
    c, s = np.cos(cfg.gamma), np.sin(cfg.gamma)
    dp = np.exp(1j * np.pi * tau * f)
    dm = np.exp(-1j * np.pi * tau * f)
    # R^T @ diag(dp, dm) @ R, expanded elementwise
    h = np.empty((2, 2, fft_size), dtype=complex)
    h[0, 0] = c * c * dp + s * s * dm
    h[0, 1] = c * s * dp - s * c * dm
    h[1, 0] = s * c * dp - c * s * dm
    h[1, 1] = s * s * dp + c * c * dm
    beta_s2 = cfg.beta * PS * PS  # ps^2/km -> s^2/km
    cd = np.exp(-2j * np.pi**2 * beta_s2 * cfg.l_cd_km * f**2)
    h *= cd
    return FrequencyResponse2x2(h=h, freq_grid=f)


def apply_channel(waveform, resp):
    """Apply the 2x2 frequency response to a (2, n) waveform.

    The full transmission is processed as one FFT; the response must have
    been built with ``fft_size == n``.  The block is treated circularly, so
    callers discard warm-up samples at stream edges.
    """
    waveform = np.asarray(waveform)
    n = waveform.shape[-1]
    if waveform.shape != (2, n) or resp.h.shape[-1] != n:
        raise ShapeError("waveform must be (2, n) matching the response grid")
    spec = np.fft.fft(waveform, axis=-1)
    out = np.empty_like(spec)
    out[0] = resp.h[0, 0] * spec[0] + resp.h[0, 1] * spec[1]
    out[1] = resp.h[1, 0] * spec[0] + resp.h[1, 1] * spec[1]
    return np.fft.ifft(out, axis=-1)


def add_awgn(waveform, snr_db, signal_power, rng_seed, sps=2):
    """Add circularly-symmetric complex white Gaussian noise.

    ``signal_power`` is the mean per-sample power at ``sps`` samples/symbol;
    ``snr_db`` the target per-polarization symbol-rate SNR (see module
    docstring).  ``snr_db=None`` or ``inf`` disables noise.
    """
    waveform = np.asarray(waveform)
    if snr_db is None or np.isinf(snr_db):
        return waveform.copy()
    noise_var = signal_power * sps / 10 ** (snr_db / 10)
    rng = np.random.default_rng(rng_seed)
    scale = np.sqrt(noise_var / 2)
    noise = scale * (
        rng.standard_normal(waveform.shape) + 1j * rng.standard_normal(waveform.shape)
    )
    return waveform + noise
