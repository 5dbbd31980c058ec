"""Blind VQ-VAE equalizers for dual-polarization streams.

Two interchangeable implementations of the same encoder-decoder pair:

* :class:`FdVqvaeEqualizer` -- the decoder splits each block of ``N``
  2x-oversampled observations into even/odd sample phases, runs two
  symbol-rate 2x2 butterflies in the frequency domain with 50% overlap-save
  (FFT size ``N``), and keeps the last ``N/2`` output symbols.  The encoder
  upsamples the decisions, filters them through a 2x2 butterfly with FFT
  size ``2N``, and keeps the last ``N`` samples as the reconstruction of the
  channel observations.
* :class:`TdVqvaeEqualizer` -- identical contract with direct time-domain
  butterfly convolutions, the equal-degrees-of-freedom reference (a
  ``2*n_tap``-tap fractionally spaced filter splits into two ``n_tap``-tap
  sample-phase subfilters).

All trainable parameters are time-domain taps; the frequency-domain filter
values are their FFTs, refreshed after every update.  Training minimizes

    (1 - rho) * ||r - r_reconstructed||^2 + rho * ||u_out - u_decided||^2

with the decisions treated as constants (no gradient through the
quantizer): the decoder trains on the decision-pull term only, the encoder
on the reconstruction term only.  Gradients are exact partials of the loss
with respect to the real and imaginary part of every tap, packed as complex
numbers.

Alignment: the decoder delays the symbol stream by its init spike position
(``n_tap // 2`` symbols) and the encoder filter needs taps on both sides of
the channel's zero lag, so the reconstruction term compares against the
received stream delayed by ``reconstruction_lag`` samples (default
``2*(n_tap//2) + enc_n_tap//2``, which centers the encoder's lag range on
the channel response).
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, NumericalError, ShapeError
from .modem import Constellation, map_demap
from .optim import AdamState, adam_step
from .dsp import is_pow2

NOISE_VAR_INIT = 0.1
NOISE_VAR_FLOOR = 1e-4
DIVERGENCE_BOUNDS = (1e-3, 1e3)


@dataclass
class TrainConfig:
    rho: float = 0.5
    learning_rate: float = 0.0008
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    block_size_n: int = 32
    mode: str = "vqvae"  # "vqvae" or "decision-directed"

    def __post_init__(self):
        if not 0.0 < self.rho <= 1.0:
            raise ConfigError(f"rho must be in (0, 1], got {self.rho}")
        if not is_pow2(self.block_size_n):
            raise ConfigError(f"block size must be a power of two, got {self.block_size_n}")
        if self.mode not in ("vqvae", "decision-directed"):
            raise ConfigError(f"unknown training mode {self.mode!r}")

    @property
    def effective_rho(self):
        return 1.0 if self.mode == "decision-directed" else self.rho


@dataclass
class BlockResult:
    u_hat: np.ndarray
    u_tilde: np.ndarray
    loss: float
    update_index: int


@dataclass
class _DecoderFwd:
    spectra: np.ndarray  # (2 phases, 2 pols, N) FFTs of the overlap windows
    windows: np.ndarray  # (2 phases, 2 pols, N) the windows themselves


@dataclass
class _EncoderFwd:
    spectrum: np.ndarray  # (2 pols, 2N) FFT of the upsampled-decision window
    window: np.ndarray   # (2 pols, 2N)


def vqvae_loss(r, r_tilde, u_tilde, u_hat, rho):
    """Two-term training objective, summed over both polarizations."""
    rec = float(np.sum(np.abs(np.asarray(r) - np.asarray(r_tilde)) ** 2))
    dec = float(np.sum(np.abs(np.asarray(u_tilde) - np.asarray(u_hat)) ** 2))
    return (1.0 - rho) * rec + rho * dec


def count_inference_mults(kind, n_tap_or_n):
    """Complex multiplications per equalized symbol per polarization."""
    if kind == "td":
        return 2 * n_tap_or_n
    if kind == "fd":
        if not is_pow2(n_tap_or_n):
            raise ConfigError(f"FD block size must be a power of two, got {n_tap_or_n}")
        return 3 * int(np.log2(n_tap_or_n)) + 8
    raise ConfigError(f"unknown equalizer kind {kind!r}")


class _VqvaeEqualizerBase:
    """State and training loop shared by the FD and TD implementations."""

    kind = ""

    def __init__(self, constellation, cfg, n_tap=None, enc_n_tap=None, reconstruction_lag=None):
        if not isinstance(constellation, Constellation):
            raise ConfigError("constellation must be a Constellation")
        self.constellation = constellation
        self.cfg = cfg
        n = cfg.block_size_n
        self.block_size = n
        self.half = n // 2
        self.n_tap = self.half if n_tap is None else int(n_tap)
        self.enc_n_tap = n if enc_n_tap is None else int(enc_n_tap)
        if not 1 <= self.n_tap <= self.half:
            raise ConfigError(f"decoder taps must be in [1, N/2], got {self.n_tap}")
        if not 1 <= self.enc_n_tap <= n:
            raise ConfigError(f"encoder taps must be in [1, N], got {self.enc_n_tap}")
        spike = self.n_tap // 2
        if reconstruction_lag is None:
            reconstruction_lag = 2 * spike + self.enc_n_tap // 2
        self.reconstruction_lag = int(reconstruction_lag)
        if not 0 <= self.reconstruction_lag <= n:
            raise ConfigError("reconstruction lag must be in [0, N] samples")

        # decoder taps: (phase even/odd, out pol, in pol, tap)
        self.dec_taps = np.zeros((2, 2, 2, self.n_tap), dtype=complex)
        self.dec_taps[0, 0, 0, spike] = 1.0
        self.dec_taps[0, 1, 1, spike] = 1.0
        # encoder taps: (out pol, in pol, tap); spike on the 2-spaced grid
        self.enc_taps = np.zeros((2, 2, self.enc_n_tap), dtype=complex)
        enc_spike = 2 * (self.enc_n_tap // 4)
        self.enc_taps[0, 0, enc_spike] = 1.0
        self.enc_taps[1, 1, enc_spike] = 1.0

        self.buf_even = np.zeros((2, self.half), dtype=complex)
        self.buf_odd = np.zeros((2, self.half), dtype=complex)
        self.buf_up = np.zeros((2, n), dtype=complex)
        self.buf_rx = np.zeros((2, n), dtype=complex)

        self.adam = AdamState.for_params([self.dec_taps, self.enc_taps])
        self.noise_var = NOISE_VAR_INIT
        self.update_count = 0
        self._refresh_fd_cache()

    # -- implementation hooks -------------------------------------------------

    def _refresh_fd_cache(self):
        pass

    def _decoder_core(self, windows):
        raise NotImplementedError

    def _encoder_core(self, window):
        raise NotImplementedError

    def _decoder_grads(self, fwd, eps):
        raise NotImplementedError

    def _encoder_grads(self, fwd, delta):
        raise NotImplementedError

    # -- forward passes -------------------------------------------------------

    def decoder_forward(self, r_block, update_buffers=True):
        """Equalize one (2, N) block; returns (2, N/2) symbols + intermediates."""
        r_block = np.asarray(r_block)
        if r_block.shape != (2, self.block_size):
            raise ShapeError(f"expected (2, {self.block_size}) block, got {r_block.shape}")
        even, odd = r_block[:, 0::2], r_block[:, 1::2]
        windows = np.stack(
            [
                np.concatenate([self.buf_even, even], axis=1),
                np.concatenate([self.buf_odd, odd], axis=1),
            ]
        )
        u_tilde, fwd = self._decoder_core(windows)
        if update_buffers:
            self.buf_even = even.copy()
            self.buf_odd = odd.copy()
        return u_tilde, fwd

    def encoder_forward(self, u_hat, update_buffers=True):
        """Reconstruct one (2, N) observation block from (2, N/2) decisions."""
        u_hat = np.asarray(u_hat)
        if u_hat.shape != (2, self.half):
            raise ShapeError(f"expected (2, {self.half}) decisions, got {u_hat.shape}")
        up = np.zeros((2, self.block_size), dtype=complex)
        up[:, ::2] = u_hat
        window = np.concatenate([self.buf_up, up], axis=1)
        r_tilde, fwd = self._encoder_core(window)
        if update_buffers:
            self.buf_up = up
        return r_tilde, fwd

    def compute_gradients(self, dec_fwd, enc_fwd, r_target, u_tilde, u_hat, r_tilde, weights=None):
        """Exact loss partials for every decoder and encoder tap.

        Decisions are constants: the decoder gradient comes from the
        decision-pull term only, the encoder gradient from the
        reconstruction term only.  ``weights`` overrides the default
        ``(1 - rho, rho)`` term weights.
        """
        w_rec, w_dec = weights if weights is not None else (
            1.0 - self.cfg.effective_rho,
            self.cfg.effective_rho,
        )
        eps = np.asarray(u_tilde) - np.asarray(u_hat)
        delta = np.asarray(r_tilde) - np.asarray(r_target)
        dec_g = 2.0 * w_dec * self._decoder_grads(dec_fwd, eps)
        enc_g = 2.0 * w_rec * self._encoder_grads(enc_fwd, delta)
        return dec_g, enc_g

    # -- training -------------------------------------------------------------

    def _reconstruction_target(self, r_block):
        lag = self.reconstruction_lag
        if lag == 0:
            return r_block
        joined = np.concatenate([self.buf_rx, r_block], axis=1)
        return joined[:, self.block_size - lag : 2 * self.block_size - lag]

    def train_block(self, r_block):
        """One block: forward, demap, reconstruct, one Adam update."""
        r_block = np.asarray(r_block)
        r_target = self._reconstruction_target(r_block)
        u_tilde, dec_fwd = self.decoder_forward(r_block)
        u_hat = map_demap(u_tilde, self.constellation, self.noise_var)
        r_tilde, enc_fwd = self.encoder_forward(u_hat)
        loss = vqvae_loss(r_target, r_tilde, u_tilde, u_hat, self.cfg.effective_rho)
        dec_g, enc_g = self.compute_gradients(
            dec_fwd, enc_fwd, r_target, u_tilde, u_hat, r_tilde
        )
        adam_step(
            [self.dec_taps, self.enc_taps],
            [dec_g, enc_g],
            self.adam,
            self.cfg.learning_rate,
            self.cfg.adam_beta1,
            self.cfg.adam_beta2,
            self.cfg.adam_eps,
        )
        self._refresh_fd_cache()
        self.buf_rx = r_block.copy()
        self.noise_var = max(float(np.mean(np.abs(u_tilde - u_hat) ** 2)), NOISE_VAR_FLOOR)
        self.update_count += 1
        power = float(np.mean(np.abs(u_tilde) ** 2))
        if not DIVERGENCE_BOUNDS[0] <= power <= DIVERGENCE_BOUNDS[1]:
            raise NumericalError(
                f"equalizer output power {power:.3e} outside {DIVERGENCE_BOUNDS}: diverged"
            )
        return BlockResult(u_hat=u_hat, u_tilde=u_tilde, loss=loss, update_index=self.update_count)

    def process_block(self, r_block, adapt=True):
        """Equalize one block, optionally adapting; returns decisions."""
        if adapt:
            return self.train_block(r_block).u_hat
        r_block = np.asarray(r_block)
        u_tilde, _ = self.decoder_forward(r_block)
        u_hat = map_demap(u_tilde, self.constellation, self.noise_var)
        self.buf_up = np.zeros((2, self.block_size), dtype=complex)
        self.buf_up[:, ::2] = u_hat
        self.buf_rx = r_block.copy()
        return u_hat

    # -- checkpointing ---------------------------------------------------------

    def snapshot(self):
        """JSON-serializable state: taps, buffers, Adam moments, counters."""

        def c(a):
            return {"re": a.real.tolist(), "im": a.imag.tolist()}

        return {
            "schema": "blindeq-eqstate-v1",
            "kind": self.kind,
            "block_size": self.block_size,
            "n_tap": self.n_tap,
            "enc_n_tap": self.enc_n_tap,
            "reconstruction_lag": self.reconstruction_lag,
            "dec_taps": c(self.dec_taps),
            "enc_taps": c(self.enc_taps),
            "buffers": {
                "even": c(self.buf_even),
                "odd": c(self.buf_odd),
                "up": c(self.buf_up),
                "rx": c(self.buf_rx),
            },
            "adam": {
                "m": [c(m) for m in self.adam.first_moment],
                "v_re": [v.tolist() for v in self.adam.second_moment_re],
                "v_im": [v.tolist() for v in self.adam.second_moment_im],
                "step_count": self.adam.step_count,
            },
            "noise_var": self.noise_var,
            "update_count": self.update_count,
        }

    def restore(self, snap):
        def c(d):
            return np.asarray(d["re"], dtype=float) + 1j * np.asarray(d["im"], dtype=float)

        if snap.get("schema") != "blindeq-eqstate-v1":
            raise ConfigError(f"unsupported snapshot schema {snap.get('schema')!r}")
        if snap["kind"] != self.kind or snap["block_size"] != self.block_size:
            raise ConfigError("snapshot does not match this equalizer configuration")
        self.dec_taps = c(snap["dec_taps"])
        self.enc_taps = c(snap["enc_taps"])
        self.buf_even = c(snap["buffers"]["even"])
        self.buf_odd = c(snap["buffers"]["odd"])
        self.buf_up = c(snap["buffers"]["up"])
        self.buf_rx = c(snap["buffers"]["rx"])
        self.adam = AdamState(
            first_moment=[c(m) for m in snap["adam"]["m"]],
            second_moment_re=[np.asarray(v, dtype=float) for v in snap["adam"]["v_re"]],
            second_moment_im=[np.asarray(v, dtype=float) for v in snap["adam"]["v_im"]],
            step_count=snap["adam"]["step_count"],
        )
        self.noise_var = snap["noise_var"]
        self.update_count = snap["update_count"]
        self._refresh_fd_cache()

    def save(self, path):
        with open(path, "w") as f:
            json.dump(self.snapshot(), f)

    def load(self, path):
        with open(path) as f:
            self.restore(json.load(f))


class FdVqvaeEqualizer(_VqvaeEqualizerBase):
    """Frequency-domain implementation (overlap-save butterflies)."""

    kind = "fd"

    def _refresh_fd_cache(self):
        n = self.block_size
        self.dec_fd = np.fft.fft(self.dec_taps, n=n, axis=-1)      # (2, 2, 2, N)
        self.enc_fd = np.fft.fft(self.enc_taps, n=2 * n, axis=-1)  # (2, 2, 2N)

    def _decoder_core(self, windows):
        spectra = np.fft.fft(windows, axis=-1)  # (2 phases, 2 pols, N)
        u_spec = np.einsum("poif,pif->of", self.dec_fd, spectra)
        u_full = np.fft.ifft(u_spec, axis=-1)
        return u_full[:, self.half :], _DecoderFwd(spectra=spectra, windows=windows)

    def _encoder_core(self, window):
        spectrum = np.fft.fft(window, axis=-1)  # (2, 2N)
        r_spec = np.einsum("oif,if->of", self.enc_fd, spectrum)
        r_full = np.fft.ifft(r_spec, axis=-1)
        return r_full[:, self.block_size :], _EncoderFwd(spectrum=spectrum, window=window)

    def _decoder_grads(self, fwd, eps):
        pad = np.zeros((2, self.half), dtype=complex)
        err_spec = np.fft.fft(np.concatenate([pad, eps], axis=1), axis=-1)  # (2, N)
        # corr[p, o, i, l] = sum_m eps[o, m] * conj(window[p, i, half + m - l])
        prod = err_spec[None, :, None, :] * np.conj(fwd.spectra)[:, None, :, :]
        corr = np.fft.ifft(prod, axis=-1)[..., : self.n_tap]
        return corr

    def _encoder_grads(self, fwd, delta):
        n = self.block_size
        pad = np.zeros((2, n), dtype=complex)
        err_spec = np.fft.fft(np.concatenate([pad, delta], axis=1), axis=-1)  # (2, 2N)
        prod = err_spec[:, None, :] * np.conj(fwd.spectrum)[None, :, :]
        corr = np.fft.ifft(prod, axis=-1)[..., : self.enc_n_tap]
        return corr


class TdVqvaeEqualizer(_VqvaeEqualizerBase):
    """Time-domain reference with direct butterfly convolutions.

    ``n_tap`` is the per-phase subfilter length, so the fractionally spaced
    delay-tap count per butterfly arm is ``2 * n_tap`` (equal degrees of
    freedom with the FD version at the same ``n_tap``).
    """

    kind = "td"

    @property
    def n_tap_td(self):
        return 2 * self.n_tap

    def _decoder_core(self, windows):
        u_tilde = np.zeros((2, self.half), dtype=complex)
        for p in range(2):
            for o in range(2):
                for i in range(2):
                    conv = np.convolve(windows[p, i], self.dec_taps[p, o, i])
                    u_tilde[o] += conv[self.half : self.block_size]
        return u_tilde, _DecoderFwd(spectra=None, windows=windows)

    def _encoder_core(self, window):
        n = self.block_size
        r_tilde = np.zeros((2, n), dtype=complex)
        for o in range(2):
            for i in range(2):
                conv = np.convolve(window[i], self.enc_taps[o, i])
                r_tilde[o] += conv[n : 2 * n]
        return r_tilde, _EncoderFwd(spectrum=None, window=window)

    @staticmethod
    def _corr(window, err, start, n_lags):
        # corr[l] = sum_m err[m] * conj(window[start + m - l]), l = 0..n_lags-1
        m = len(err)
        sw = np.lib.stride_tricks.sliding_window_view(window, m)
        rows = sw[start - n_lags + 1 : start + 1][::-1]
        return rows.conj() @ err

    def _decoder_grads(self, fwd, eps):
        g = np.empty((2, 2, 2, self.n_tap), dtype=complex)
        for p in range(2):
            for o in range(2):
                for i in range(2):
                    g[p, o, i] = self._corr(fwd.windows[p, i], eps[o], self.half, self.n_tap)
        return g

    def _encoder_grads(self, fwd, delta):
        g = np.empty((2, 2, self.enc_n_tap), dtype=complex)
        for o in range(2):
            for i in range(2):
                g[o, i] = self._corr(fwd.window[i], delta[o], self.block_size, self.enc_n_tap)
        return g


def load_equalizer(path_or_snap, constellation, cfg):
    """Rebuild an equalizer from a snapshot file or dict."""
    if isinstance(path_or_snap, (str, bytes)):
        with open(path_or_snap) as f:
            snap = json.load(f)
    else:
        snap = path_or_snap
    cls = {"fd": FdVqvaeEqualizer, "td": TdVqvaeEqualizer}.get(snap.get("kind"))
    if cls is None:
        raise ConfigError(f"unknown equalizer kind {snap.get('kind')!r}")
    eq = cls(
        constellation,
        cfg,
        n_tap=snap["n_tap"],
        enc_n_tap=snap["enc_n_tap"],
        reconstruction_lag=snap["reconstruction_lag"],
    )
    eq.restore(snap)
    return eq
