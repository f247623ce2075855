"""RIFF/WAVE reading and writing: PCM 16/24-bit and IEEE float 32-bit, 1-2 channels."""

from __future__ import annotations

import logging
import struct

import numpy as np

from .buffers import MonoClip, StereoBuffer

log = logging.getLogger(__name__)

_PCM = 1
_FLOAT = 3
_EXTENSIBLE = 0xFFFE
_SUPPORTED = {(_PCM, 16), (_PCM, 24), (_FLOAT, 32)}
DITHER_SEED = 0


class WavFormatError(ValueError):
    """Unsupported or malformed WAV file."""


def _chunks(data):
    pos = 12
    while pos + 8 <= len(data):
        cid, size = struct.unpack_from("<4sI", data, pos)
        yield cid, data[pos + 8 : pos + 8 + size]
        pos += 8 + size + (size & 1)


def read_wav(path):
    """Load a WAV file as :class:`StereoBuffer` (2 channels) or :class:`MonoClip`.

    Integer samples are scaled to [-1, 1) by ``2**(bits-1)``.
    """
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise WavFormatError(f"{path}: not a RIFF/WAVE file")
    fmt = body = None
    for cid, chunk in _chunks(data):
        if cid == b"fmt ":
            fmt = chunk
        elif cid == b"data":
            body = chunk
    if fmt is None or len(fmt) < 16:
        raise WavFormatError(f"{path}: missing fmt chunk")
    if body is None:
        raise WavFormatError(f"{path}: missing data chunk")
    tag, channels, rate, _, block_align, bits = struct.unpack_from("<HHIIHH", fmt)
    if tag == _EXTENSIBLE and len(fmt) >= 40:
        tag = struct.unpack_from("<H", fmt, 24)[0]
    if channels not in (1, 2):
        raise WavFormatError(f"{path}: channels={channels} unsupported (need 1 or 2)")
    if (tag, bits) not in _SUPPORTED:
        raise WavFormatError(
            f"{path}: audio_format={tag} bits_per_sample={bits} unsupported "
            "(need PCM 16/24-bit or float 32-bit)"
        )
    width = bits // 8
    n = len(body) // (width * channels)
    body = body[: n * width * channels]
    if tag == _FLOAT:
        x = np.frombuffer(body, dtype="<f4").astype(np.float64)
    elif bits == 16:
        x = np.frombuffer(body, dtype="<i2") / 32768.0
    else:
        b = np.frombuffer(body, dtype=np.uint8).reshape(-1, 3).astype(np.int32)
        v = b[:, 0] | (b[:, 1] << 8) | (b[:, 2] << 16)
        v = np.where(v & 0x800000, v - (1 << 24), v)
        x = v / float(1 << 23)
    x = x.reshape(n, channels)
    if channels == 1:
        return MonoClip(x[:, 0].copy(), float(rate))
    return StereoBuffer(x[:, 0].copy(), x[:, 1].copy(), float(rate))


def write_wav(buf, path, bit_depth=32, dither=True):
    """Write a :class:`StereoBuffer` or :class:`MonoClip`.

    ``bit_depth`` 32 writes IEEE float (lossless for float32 data). 16 and 24
    write PCM after adding seeded TPDF dither of +-1 LSB (when ``dither``) and
    rounding; out-of-range samples are clamped and counted. Returns the number
    of clamped samples.
    """
    if isinstance(buf, MonoClip):
        chans = [np.asarray(buf.samples, dtype=float)]
    else:
        chans = [buf.left, buf.right]
    n = len(chans[0])
    if n == 0:
        raise ValueError("refusing to write an empty buffer")
    x = np.stack(chans, axis=1)
    nch = x.shape[1]
    clipped = 0
    if bit_depth == 32:
        tag, payload = _FLOAT, x.astype("<f4").tobytes()
    elif bit_depth in (16, 24):
        tag = _PCM
        scale = float(1 << (bit_depth - 1))
        v = x * scale
        if dither:
            rng = np.random.default_rng(DITHER_SEED)
            v = v + rng.uniform(-0.5, 0.5, v.shape) + rng.uniform(-0.5, 0.5, v.shape)
        v = np.rint(v)
        lo, hi = -scale, scale - 1
        over = (v < lo) | (v > hi)
        clipped = int(over.sum())
        v = np.clip(v, lo, hi).astype(np.int32)
        if bit_depth == 16:
            payload = v.astype("<i2").tobytes()
        else:
            u = v.astype("<i4").view(np.uint8).reshape(-1, 4)[:, :3]
            payload = np.ascontiguousarray(u).tobytes()
        if clipped:
            log.warning("%s: %d samples clamped to full scale", path, clipped)
    else:
        raise ValueError(f"unsupported bit depth {bit_depth} (16, 24 or 32)")
    width = bit_depth // 8
    rate = int(round(buf.sample_rate))
    fmt = struct.pack("<HHIIHH", tag, nch, rate, rate * nch * width, nch * width, bit_depth)
    if tag == _FLOAT:
        fmt += struct.pack("<H", 0)
    chunks = b"fmt " + struct.pack("<I", len(fmt)) + fmt
    if tag == _FLOAT:
        chunks += b"fact" + struct.pack("<II", 4, n)
    chunks += b"data" + struct.pack("<I", len(payload)) + payload
    if len(payload) & 1:
        chunks += b"\x00"
    with open(path, "wb") as fh:
        fh.write(b"RIFF" + struct.pack("<I", 4 + len(chunks)) + b"WAVE" + chunks)
    return clipped


def wav_bit_depth(path):
    """Bits per sample of an existing WAV file."""
    with open(path, "rb") as fh:
        data = fh.read(4096)
    for cid, chunk in _chunks(data):
        if cid == b"fmt ":
            return struct.unpack_from("<H", chunk, 14)[0]
    raise WavFormatError(f"{path}: missing fmt chunk")
