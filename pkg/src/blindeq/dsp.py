"""Complex-signal primitives shared by the equalizers and the channel model.

FFT convention used throughout the package: unnormalized forward transform,
``1/n`` scaling on the inverse (numpy's default).  With this convention the
frequency-domain image of a zero-padded tap vector equals the filter's
frequency response, so frequency-domain filter values can be compared
directly against time-domain taps.

Dual-polarization signals are ``(2, n)`` complex arrays, axis 0 = (x, y).
"""

import numpy as np

from .errors import ConfigError, ShapeError


def is_pow2(n):
    return n >= 1 and (n & (n - 1)) == 0


def fft(x, size):
    """Forward DFT (unnormalized). ``size`` must be a power of two == len(x)."""
    x = np.asarray(x)
    if not is_pow2(size):
        raise ConfigError(f"FFT size must be a power of two, got {size}")
    if x.shape[-1] != size:
        raise ShapeError(f"input length {x.shape[-1]} != FFT size {size}")
    return np.fft.fft(x, n=size, axis=-1)


def ifft(x, size):
    """Inverse DFT (scaled by 1/size), matching :func:`fft`."""
    x = np.asarray(x)
    if not is_pow2(size):
        raise ConfigError(f"FFT size must be a power of two, got {size}")
    if x.shape[-1] != size:
        raise ShapeError(f"input length {x.shape[-1]} != FFT size {size}")
    return np.fft.ifft(x, n=size, axis=-1)


def overlap_save_filter(prev_block, cur_block, fd_filter):
    """Filter one block with the 50%-overlap-save method.

    ``fd_filter`` is the 2M-point FFT of a time-domain filter whose nonzero
    taps fit in the first M positions.  The last M samples of the circular
    convolution then equal the linear convolution of the filter with the
    concatenated (previous + current) stream, evaluated over the current
    block.
    """
    prev_block = np.asarray(prev_block)
    cur_block = np.asarray(cur_block)
    fd_filter = np.asarray(fd_filter)
    m = prev_block.shape[-1]
    if cur_block.shape[-1] != m:
        raise ShapeError("previous and current block lengths differ")
    if fd_filter.shape[-1] != 2 * m:
        raise ShapeError(f"FD filter length {fd_filter.shape[-1]} != 2*{m}")
    window = np.concatenate([prev_block, cur_block], axis=-1)
    out = ifft(fft(window, 2 * m) * fd_filter, 2 * m)
    return out[..., m:]


def rrc_taps(rolloff, span_symbols, sps=2):
    """Unit-energy root-raised-cosine taps, truncated to ``span_symbols``.

    Returns ``span_symbols * sps + 1`` symmetric taps (peak at the center,
    group delay ``span_symbols * sps // 2`` samples).
    """
    if not 0.0 < rolloff <= 1.0:
        raise ConfigError(f"roll-off must be in (0, 1], got {rolloff}")
    if span_symbols % 2:
        raise ConfigError(f"span must be an even symbol count, got {span_symbols}")
    n = span_symbols * sps
    t = np.arange(-(n // 2), n // 2 + 1) / sps  # in symbol durations
    h = np.zeros(t.shape)
    tiny = 1e-12
    at_zero = np.abs(t) < tiny
    at_pole = np.abs(np.abs(t) - 1.0 / (4 * rolloff)) < tiny
    regular = ~(at_zero | at_pole)
    tr = t[regular]
    h[regular] = (
        np.sin(np.pi * tr * (1 - rolloff))
        + 4 * rolloff * tr * np.cos(np.pi * tr * (1 + rolloff))
    ) / (np.pi * tr * (1 - (4 * rolloff * tr) ** 2))
    h[at_zero] = 1 + rolloff * (4 / np.pi - 1)
    h[at_pole] = (rolloff / np.sqrt(2)) * (
        (1 + 2 / np.pi) * np.sin(np.pi / (4 * rolloff))
        + (1 - 2 / np.pi) * np.cos(np.pi / (4 * rolloff))
    )
    return h / np.linalg.norm(h)


def rrc_spectrum(f, rolloff):
    """Closed-form root-raised-cosine spectrum at frequency ``f`` (symbol rate 1).

    Normalized so the underlying raised cosine has unit gain at f=0.
    """
    f = np.abs(np.asarray(f, dtype=float))
    lo = (1 - rolloff) / 2
    hi = (1 + rolloff) / 2
    out = np.zeros(f.shape)
    out[f <= lo] = 1.0
    mid = (f > lo) & (f < hi)
    out[mid] = np.sqrt(0.5 * (1 + np.cos(np.pi / rolloff * (f[mid] - lo))))
    return out


def rrc_shape(symbols, rolloff, span_symbols, sps=2):
    """Pulse-shape a symbol sequence to a ``sps``-oversampled waveform.

    Zero-insertion upsampling followed by convolution with unit-energy RRC
    taps.  The filter group delay is trimmed, so output sample ``sps*m`` is
    the peak sample of symbol ``m`` and the output length is
    ``sps * len(symbols)``.
    """
    if sps != 2:
        raise ConfigError("only 2 samples/symbol is supported")
    symbols = np.atleast_2d(np.asarray(symbols))
    taps = rrc_taps(rolloff, span_symbols, sps)
    delay = (len(taps) - 1) // 2
    n_out = sps * symbols.shape[-1]
    up = np.zeros(symbols.shape[:-1] + (n_out,), dtype=complex)
    up[..., ::sps] = symbols
    out = np.empty_like(up)
    for p in range(up.shape[0]):
        out[p] = np.convolve(up[p], taps)[delay : delay + n_out]
    return out if np.asarray(symbols).ndim > 1 else out[0]


def split_even_odd(block):
    """Split ``(..., n)`` samples into even-index and odd-index halves."""
    block = np.asarray(block)
    if block.shape[-1] % 2:
        raise ShapeError(f"block length {block.shape[-1]} is odd")
    return block[..., 0::2], block[..., 1::2]


def interleave(even, odd):
    """Inverse of :func:`split_even_odd`."""
    even = np.asarray(even)
    odd = np.asarray(odd)
    if even.shape != odd.shape:
        raise ShapeError("even/odd shapes differ")
    out = np.empty(even.shape[:-1] + (2 * even.shape[-1],), dtype=np.result_type(even, odd))
    out[..., 0::2] = even
    out[..., 1::2] = odd
    return out


def upsample_zero_insert(symbols, sps=2):
    """Insert ``sps - 1`` zeros after every symbol."""
    symbols = np.asarray(symbols)
    out = np.zeros(symbols.shape[:-1] + (sps * symbols.shape[-1],), dtype=complex)
    out[..., ::sps] = symbols
    return out
