"""Synthetic GDF 2.x session files for converter tests.

The writer follows the published GDF 2.x byte layout (fixed 256-byte
header, field-major 256-byte channel headers, typed data records,
trailing event table) so it doubles as an independent oracle for the
reader.
"""

import struct

import numpy as np
from scipy.io import savemat

CHANNELS = 25  # 22 EEG + 3 EOG
FS = 250.0
SAMPLES_PER_RECORD = 250

EVENT_TRIAL_START = 768
CUE_TYPES = (769, 770, 771, 772)
EVENT_CUE_UNKNOWN = 783


def balanced_labels(rng, n_per_class=72, n_classes=4):
    labels = np.repeat(np.arange(1, n_classes + 1), n_per_class)
    return rng.permutation(labels)


def write_gdf(path, data, cue_samples, cue_types, fs=FS,
              physical_range=(-100.0, 100.0), digital_range=(-2048, 2047),
              sample_type=3, spr=SAMPLES_PER_RECORD):
    """Serialize (channels, samples) float64 physical data as GDF 2.x.

    Samples are quantized through the digital range, so values round-trip
    only to calibration precision. The sample count must be a whole
    number of records.
    """
    ns, total = data.shape
    if total % spr:
        raise ValueError(f"{total} samples is not a whole number of {spr}-sample records")
    n_records = total // spr
    physmin, physmax = physical_range
    digmin, digmax = digital_range

    head_blocks = 1 + ns  # fixed header + one block per channel
    fixed = bytearray(256)
    fixed[0:8] = b"GDF 2.20"
    struct.pack_into("<H", fixed, 184, head_blocks)
    struct.pack_into("<q", fixed, 236, n_records)
    # record duration: spr samples at fs Hz = spr/fs seconds as a rational
    struct.pack_into("<2I", fixed, 244, spr, int(fs))
    struct.pack_into("<H", fixed, 252, ns)

    labels = [f"EEG-C{i:02d}" for i in range(ns - 3)] + \
             ["EOG-left", "EOG-central", "EOG-right"]
    chan = bytearray(256 * ns)
    off = 0
    for lab in labels:
        chan[off:off + 16] = lab.encode("latin-1").ljust(16)
        off += 16
    off += 80 * ns   # transducer
    off += 6 * ns    # physical dimension text
    off += 2 * ns    # dimension code
    for value in (physmin, physmax, float(digmin), float(digmax)):
        for _ in range(ns):
            struct.pack_into("<d", chan, off, value)
            off += 8
    off += 64 * ns   # prefiltering
    off += 4 * ns * 4  # time offset, lowpass, highpass, notch
    for _ in range(ns):
        struct.pack_into("<I", chan, off, spr)
        off += 4
    for _ in range(ns):
        struct.pack_into("<I", chan, off, sample_type)
        off += 4
    # electrode positions (3f32) and sensor description fill the rest

    scale = (digmax - digmin) / (physmax - physmin)
    if sample_type == 3:
        dig = np.clip(np.round((data - physmin) * scale + digmin),
                      digmin, digmax).astype("<i2")
    elif sample_type == 16:
        dig = ((data - physmin) * scale + digmin).astype("<f4")
    else:
        raise ValueError(f"fixture writer does not emit sample type {sample_type}")

    records = bytearray()
    for r in range(n_records):
        sl = slice(r * spr, (r + 1) * spr)
        for c in range(ns):
            records += dig[c, sl].tobytes()

    positions = []
    types = []
    for cue, cue_type in zip(cue_samples, cue_types):
        positions += [cue - 2 + 1, cue + 1]  # trial start, then cue (1-based)
        types += [EVENT_TRIAL_START, cue_type]
    table = bytearray()
    table += bytes([1])                      # mode 1
    table += int(len(positions)).to_bytes(3, "little")
    table += struct.pack("<f", fs)
    table += np.asarray(positions, dtype="<u4").tobytes()
    table += np.asarray(types, dtype="<u2").tobytes()

    with open(path, "wb") as fh:
        fh.write(bytes(fixed) + bytes(chan) + bytes(records) + bytes(table))


def make_session(tmp_dir, subject, session, seed, n_trials=288,
                 cue_spacing=60, first_cue=60, channels=CHANNELS):
    """Write A0<subject><T|E>.gdf plus its .mat label file; returns
    (gdf_path, mat_path, data, cue_samples, labels_1based)."""
    rng = np.random.default_rng(seed)
    total = first_cue + n_trials * cue_spacing
    total += (-total) % SAMPLES_PER_RECORD
    data = rng.uniform(-50.0, 50.0, size=(channels, total))
    cue_samples = first_cue + np.arange(n_trials) * cue_spacing
    labels = balanced_labels(rng, n_per_class=n_trials // 4)
    if session == 1:
        cue_types = [CUE_TYPES[lab - 1] for lab in labels]
        stem = f"A0{subject}T"
    else:
        cue_types = [EVENT_CUE_UNKNOWN] * n_trials
        stem = f"A0{subject}E"
    gdf_path = tmp_dir / f"{stem}.gdf"
    mat_path = tmp_dir / f"{stem}.mat"
    write_gdf(gdf_path, data, cue_samples, cue_types)
    savemat(mat_path, {"classlabel": labels.reshape(-1, 1).astype(np.float64)})
    return gdf_path, mat_path, data, cue_samples, labels
