"""Minimal reader for GDF 2.x biosignal files.

Parses exactly what cue-aligned trial extraction needs: the fixed
header, per-channel calibration, the sample records, and the event
table. Samples are returned calibrated to physical units as float64,
shaped (channels, samples).

Layout (little-endian throughout):

  fixed header, 256 bytes:
    0   8s   version string, "GDF 2.xx"
    184 u16  header length in 256-byte blocks
    236 i64  number of data records
    244 2u32 record duration as a rational (numerator, denominator) seconds
    252 u16  channel count NS

  channel headers, 256 * NS bytes, field-major (all labels, then all
  transducers, ...):
    16s label, 80s transducer, 6s physical dimension, u16 dimension code,
    f64 physmin, f64 physmax, f64 digmin, f64 digmax, 64s prefiltering,
    f32 time offset, f32 lowpass, f32 highpass, f32 notch,
    u32 samples per record, u32 sample type, 3f32 electrode position,
    20s sensor description

  data records: for each record, for each channel, SPR samples of the
  channel's sample type.

  event table:
    u8 mode, u24 event count NEV, f32 event sample rate,
    u32[NEV] positions (1-based sample index), u16[NEV] type codes;
    mode 3 appends u16[NEV] channels and u32[NEV] durations.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

FIXED_HEADER_SIZE = 256
CHANNEL_HEADER_SIZE = 256

# sample type code -> numpy dtype (the subset used by EEG recordings)
SAMPLE_TYPES = {
    1: np.dtype("<i1"),
    2: np.dtype("<u1"),
    3: np.dtype("<i2"),
    4: np.dtype("<u2"),
    5: np.dtype("<i4"),
    6: np.dtype("<u4"),
    16: np.dtype("<f4"),
    17: np.dtype("<f8"),
}


class GdfError(ValueError):
    """File violates the GDF 2.x layout this reader understands."""


@dataclass
class GdfRecording:
    fs: float                 # sampling rate in Hz
    labels: list              # channel labels, stripped
    data: np.ndarray          # (channels, samples) float64, physical units
    event_positions: np.ndarray  # 0-based sample indices
    event_types: np.ndarray      # GDF event type codes

    @property
    def n_channels(self):
        return self.data.shape[0]

    @property
    def n_samples(self):
        return self.data.shape[1]


def _field(raw, offset, count, item_size):
    """Slice one field-major channel-header field for all channels."""
    return raw[offset:offset + count * item_size]


def read_gdf(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < FIXED_HEADER_SIZE:
        raise GdfError(f"{path}: {len(raw)} bytes is shorter than the fixed header")
    version = raw[:8]
    if not version.startswith(b"GDF 2"):
        raise GdfError(f"{path}: unsupported version tag {version!r}")
    (head_blocks,) = struct.unpack_from("<H", raw, 184)
    (n_records,) = struct.unpack_from("<q", raw, 236)
    dur_num, dur_den = struct.unpack_from("<2I", raw, 244)
    (ns,) = struct.unpack_from("<H", raw, 252)
    if ns < 1:
        raise GdfError(f"{path}: channel count {ns} < 1")
    header_len = head_blocks * 256
    if header_len < FIXED_HEADER_SIZE + ns * CHANNEL_HEADER_SIZE:
        raise GdfError(f"{path}: header length {header_len} too small for {ns} channels")
    if len(raw) < header_len:
        raise GdfError(f"{path}: truncated inside the header")
    if n_records < 0 or dur_num == 0 or dur_den == 0:
        raise GdfError(f"{path}: invalid record count/duration "
                       f"({n_records}, {dur_num}/{dur_den})")

    ch = raw[FIXED_HEADER_SIZE:FIXED_HEADER_SIZE + ns * CHANNEL_HEADER_SIZE]
    off = 0
    labels = [ch[off + 16 * i: off + 16 * (i + 1)].decode("latin-1").strip()
              for i in range(ns)]
    off += 16 * ns      # labels
    off += 80 * ns      # transducer
    off += 6 * ns       # physical dimension (text)
    off += 2 * ns       # physical dimension code
    physmin = np.frombuffer(_field(ch, off, ns, 8), dtype="<f8"); off += 8 * ns
    physmax = np.frombuffer(_field(ch, off, ns, 8), dtype="<f8"); off += 8 * ns
    digmin = np.frombuffer(_field(ch, off, ns, 8), dtype="<f8"); off += 8 * ns
    digmax = np.frombuffer(_field(ch, off, ns, 8), dtype="<f8"); off += 8 * ns
    off += 64 * ns      # prefiltering
    off += 4 * ns       # time offset
    off += 4 * ns       # lowpass
    off += 4 * ns       # highpass
    off += 4 * ns       # notch
    spr = np.frombuffer(_field(ch, off, ns, 4), dtype="<u4"); off += 4 * ns
    gdftyp = np.frombuffer(_field(ch, off, ns, 4), dtype="<u4"); off += 4 * ns

    if np.any(spr != spr[0]):
        raise GdfError(f"{path}: channels disagree on samples per record "
                       f"({sorted(set(spr.tolist()))}); not supported")
    samples_per_record = int(spr[0])
    if samples_per_record < 1:
        raise GdfError(f"{path}: samples per record is {samples_per_record}")
    record_seconds = dur_num / dur_den
    fs = samples_per_record / record_seconds
    for code in set(gdftyp.tolist()):
        if code not in SAMPLE_TYPES:
            raise GdfError(f"{path}: unsupported sample type code {code}")
    if np.any(digmax == digmin):
        raise GdfError(f"{path}: zero digital range on some channel")

    record_bytes = sum(samples_per_record * SAMPLE_TYPES[int(c)].itemsize
                       for c in gdftyp)
    data_end = header_len + n_records * record_bytes
    if len(raw) < data_end:
        raise GdfError(f"{path}: truncated inside the data records "
                       f"(need {data_end} bytes, have {len(raw)})")

    data = np.empty((ns, n_records * samples_per_record))
    scale = (physmax - physmin) / (digmax - digmin)
    pos = header_len
    for r in range(n_records):
        out = slice(r * samples_per_record, (r + 1) * samples_per_record)
        for c in range(ns):
            dt = SAMPLE_TYPES[int(gdftyp[c])]
            nbytes = samples_per_record * dt.itemsize
            dig = np.frombuffer(raw, dtype=dt, count=samples_per_record, offset=pos)
            data[c, out] = (dig.astype(np.float64) - digmin[c]) * scale[c] + physmin[c]
            pos += nbytes

    positions, types = _read_event_table(raw, data_end, path)
    return GdfRecording(fs=fs, labels=labels, data=data,
                        event_positions=positions, event_types=types)


def _read_event_table(raw, offset, path):
    if offset == len(raw):
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    if len(raw) < offset + 8:
        raise GdfError(f"{path}: truncated event-table header at byte {offset}")
    mode = raw[offset]
    nev = int.from_bytes(raw[offset + 1:offset + 4], "little")
    if mode not in (1, 3):
        raise GdfError(f"{path}: unknown event-table mode {mode}")
    pos = offset + 8  # mode + u24 count + f32 event sample rate
    need = nev * (4 + 2) + (nev * (2 + 4) if mode == 3 else 0)
    if len(raw) < pos + need:
        raise GdfError(f"{path}: truncated event table at byte {len(raw)}")
    positions = np.frombuffer(raw, dtype="<u4", count=nev, offset=pos)
    pos += 4 * nev
    types = np.frombuffer(raw, dtype="<u2", count=nev, offset=pos)
    # positions are 1-based sample indices in the file
    return positions.astype(np.int64) - 1, types.astype(np.int64)
