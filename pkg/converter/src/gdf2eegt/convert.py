"""Cue-aligned trial extraction and EEGT v1 container output.

The converter stores trials exactly as recorded (250 Hz, physical
units); resampling, filtering, and normalization are downstream
concerns. Each subject/session pair contributes 288 trials with labels
taken from the competition's true-label .mat files.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.io import loadmat

from .gdf import read_gdf

# event type codes: trial start, class cues 1-4, unknown cue
EVENT_TRIAL_START = 768
CUE_TYPES = (769, 770, 771, 772)
EVENT_CUE_UNKNOWN = 783

TRIALS_PER_SESSION = 288
PER_CLASS_PER_SESSION = 72
EEG_CHANNELS = 22
EOG_CHANNELS = 3

CONTAINER_MAGIC = b"EEGT"
CONTAINER_VERSION = 1
CONTAINER_HEADER = struct.Struct("<4sIIIIf")

# session -> recording file stem: A0<subject>T is session 1, A0<subject>E is 2
SESSION_SUFFIX = {1: "T", 2: "E"}


class ConversionError(RuntimeError):
    """Source data is missing or inconsistent with the protocol."""


@dataclass
class ConversionSpec:
    input_dir: Path
    output_path: Path
    subjects: tuple = tuple(range(1, 10))
    window: tuple = (0.5, 4.0)  # cue-relative (start_s, length_s)
    include_eog: bool = False

    def validate(self):
        start_s, length_s = self.window
        if length_s <= 0:
            raise ConversionError(f"window length must be positive, got {length_s}")
        if start_s < 0:
            raise ConversionError(f"window start must be >= 0, got {start_s}")
        if not self.subjects:
            raise ConversionError("no subjects selected")
        for s in self.subjects:
            if not 1 <= s <= 9:
                raise ConversionError(f"subject id {s} outside 1..9")
        return self


@dataclass
class SessionTrials:
    fs: float
    data: np.ndarray      # (n, C, T) float64
    labels: np.ndarray    # (n,) 0-based class ids
    subject: int
    session: int


def cue_positions(recording):
    """Sample indices of the per-trial cues, in recording order.

    Training sessions mark each trial with one of the four class cues;
    evaluation sessions use the single unknown-cue code.
    """
    mask = np.isin(recording.event_types, CUE_TYPES) \
        | (recording.event_types == EVENT_CUE_UNKNOWN)
    return recording.event_positions[mask]


def extract_trials(recording, labels, window, subject, session, include_eog=False):
    """Slice one cue-relative window per trial from a session recording.

    labels: 1-based class ids from the competition label file, one per
    cue, in cue order.
    """
    start_s, length_s = window
    cues = cue_positions(recording)
    if len(cues) != len(labels):
        raise ConversionError(
            f"subject {subject} session {session}: {len(cues)} cues in the "
            f"recording but {len(labels)} labels in the label file")
    n_keep = recording.n_channels if include_eog else recording.n_channels - EOG_CHANNELS
    if n_keep < 1:
        raise ConversionError(
            f"subject {subject} session {session}: {recording.n_channels} channels "
            f"cannot cover {EOG_CHANNELS} EOG channels")
    offset = int(round(start_s * recording.fs))
    length = int(round(length_s * recording.fs))
    trials = np.empty((len(cues), n_keep, length))
    for i, cue in enumerate(cues):
        lo = cue + offset
        hi = lo + length
        if lo < 0 or hi > recording.n_samples:
            raise ConversionError(
                f"subject {subject} session {session}: trial {i} window "
                f"[{lo}, {hi}) falls outside the recording ({recording.n_samples} samples)")
        trials[i] = recording.data[:n_keep, lo:hi]
    labels = np.asarray(labels, dtype=np.int64)
    if labels.min() < 1 or labels.max() > 4:
        raise ConversionError(
            f"subject {subject} session {session}: labels outside 1..4")
    return SessionTrials(fs=recording.fs, data=trials, labels=labels - 1,
                         subject=subject, session=session)


def load_labels(path):
    """1-based class ids from a competition true-label file."""
    try:
        mat = loadmat(path)
    except FileNotFoundError:
        raise
    if "classlabel" not in mat:
        raise ConversionError(f"{path}: no 'classlabel' variable")
    return np.asarray(mat["classlabel"]).ravel().astype(np.int64)


def convert_session(spec, subject, session):
    stem = f"A0{subject}{SESSION_SUFFIX[session]}"
    gdf_path = spec.input_dir / f"{stem}.gdf"
    mat_path = spec.input_dir / f"{stem}.mat"
    for p in (gdf_path, mat_path):
        if not p.exists():
            raise ConversionError(f"missing source file: {p}")
    recording = read_gdf(gdf_path)
    labels = load_labels(mat_path)
    trials = extract_trials(recording, labels, spec.window, subject, session,
                            include_eog=spec.include_eog)
    if len(trials.data) != TRIALS_PER_SESSION:
        raise ConversionError(
            f"subject {subject} session {session}: {len(trials.data)} trials "
            f"extracted, expected {TRIALS_PER_SESSION} (corrupt source)")
    counts = np.bincount(trials.labels, minlength=4)
    if not np.all(counts == PER_CLASS_PER_SESSION):
        raise ConversionError(
            f"subject {subject} session {session}: per-class trial counts "
            f"{counts.tolist()}, expected {PER_CLASS_PER_SESSION} each")
    return trials


def write_container(sessions, path):
    """Serialize SessionTrials into one EEGT v1 file.

    Header: magic, version, trial count, channels, samples, rate (f32).
    Per trial: label/subject/session bytes, then channel-major f32 data.
    """
    if not sessions:
        raise ConversionError("nothing to write")
    C, T = sessions[0].data.shape[1:]
    fs = sessions[0].fs
    for s in sessions:
        if s.data.shape[1:] != (C, T) or s.fs != fs:
            raise ConversionError(
                f"subject {s.subject} session {s.session}: shape/rate "
                f"{s.data.shape[1:]}/{s.fs} disagrees with ({C}, {T})/{fs}")
    n = sum(len(s.data) for s in sessions)
    blob = bytearray(CONTAINER_HEADER.pack(CONTAINER_MAGIC, CONTAINER_VERSION,
                                           n, C, T, float(fs)))
    for s in sessions:
        for i in range(len(s.data)):
            blob += struct.pack("<3B", int(s.labels[i]), s.subject, s.session)
            blob += np.ascontiguousarray(s.data[i], dtype="<f4").tobytes()
    with open(path, "wb") as fh:
        fh.write(bytes(blob))
    return n


def convert(spec):
    """Convert every requested subject/session and write one container.

    Returns a per-subject summary: {subject: {session: trial_count}}.
    """
    spec.validate()
    sessions = []
    summary = {}
    for subject in spec.subjects:
        summary[subject] = {}
        for session in (1, 2):
            trials = convert_session(spec, subject, session)
            sessions.append(trials)
            summary[subject][session] = len(trials.data)
    write_container(sessions, spec.output_path)
    return summary
