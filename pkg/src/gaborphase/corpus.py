"""Deterministic synthetic test signals.

Two small sets stand in for recorded corpora: speech-like signals at 16 kHz
(voiced harmonics under moving formants, fricative noise, plosive bursts) and
music-like signals at 44.1 kHz (struck, plucked, percussive and sustained
sounds).  Every signal is a pure function of its name.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .wavio import save_wav

SPEECH_RATE = 16000
MUSIC_RATE = 44100


def _envelope(t, onsets, attack, decay):
    env = np.zeros_like(t)
    for t0 in onsets:
        d = t - t0
        on = d >= 0
        env[on] += (1 - np.exp(-d[on] / attack)) * np.exp(-d[on] / decay)
    return env


def _formant_gain(freq, formants, bandwidths):
    gain = np.zeros_like(freq)
    for fc, bw in zip(formants, bandwidths):
        gain += 1 / (1 + ((freq - fc) / bw) ** 2)
    return gain


def _vowel_track(t, syllables):
    """Piecewise-linear formant tracks over the syllable list."""
    times = [s[0] for s in syllables]
    f1 = np.interp(t, times, [s[1][0] for s in syllables])
    f2 = np.interp(t, times, [s[1][1] for s in syllables])
    f3 = np.interp(t, times, [s[1][2] for s in syllables])
    return f1, f2, f3


def speech_like(seed: int, duration: float = 1.5, rate: int = SPEECH_RATE, f0: float = 120.0):
    rng = np.random.default_rng(seed)
    t = np.arange(int(duration * rate)) / rate
    vowels = [(730, 1090, 2440), (270, 2290, 3010), (530, 1840, 2480), (300, 870, 2240), (660, 1720, 2410)]
    nsyl = 4
    syl_t = np.linspace(0.1, duration - 0.1, nsyl)
    order = rng.permutation(len(vowels))[:nsyl]
    syllables = [(syl_t[i], vowels[order[i]]) for i in range(nsyl)]
    f1, f2, f3 = _vowel_track(t, syllables)

    contour = f0 * (1 + 0.15 * np.sin(2 * np.pi * t / duration * rng.uniform(0.8, 1.5)) - 0.1 * t / duration)
    phase0 = 2 * np.pi * np.cumsum(contour) / rate
    voiced = np.zeros_like(t)
    kmax = int(4000 / f0)
    for k in range(1, kmax + 1):
        fk = k * contour
        gain = _formant_gain(fk, (f1, f2, f3), (80, 100, 140)) / k**0.5
        gain[fk > rate / 2 - 500] = 0
        voiced += gain * np.sin(k * phase0 + rng.uniform(0, 2 * np.pi))

    # syllabic amplitude modulation with gaps
    env = np.zeros_like(t)
    width = duration / nsyl * 0.35
    for ts in syl_t:
        env += np.exp(-0.5 * ((t - ts) / width) ** 4)
    x = voiced * env

    # fricatives between syllables, plosive bursts at syllable onsets
    for ts in (syl_t[:-1] + syl_t[1:]) / 2:
        noise = rng.standard_normal(t.size)
        noise = np.diff(noise, prepend=0.0)  # high-frequency tilt
        x += 0.08 * noise * np.exp(-0.5 * ((t - ts) / 0.025) ** 2)
    for ts in syl_t[1:] - width * 0.9:
        burst = rng.standard_normal(t.size) * _envelope(t, [ts], 0.0005, 0.006)
        x += 0.3 * burst
    return x / np.abs(x).max() * 0.8, rate


def piano_like(seed: int, duration: float = 1.5, rate: int = MUSIC_RATE):
    rng = np.random.default_rng(seed)
    t = np.arange(int(duration * rate)) / rate
    x = np.zeros_like(t)
    notes = [(0.05, 261.63), (0.45, 329.63), (0.85, 392.0), (0.85, 523.25)]
    for t0, f in notes:
        env = _envelope(t, [t0], 0.002, 0.6)
        for k in range(1, 12):
            fk = k * f * np.sqrt(1 + 0.0004 * k**2)
            if fk > rate / 2 - 1000:
                break
            x += env * np.exp(-0.25 * k) * np.sin(2 * np.pi * fk * (t - t0) + rng.uniform(0, 2 * np.pi))
    return x / np.abs(x).max() * 0.8, rate


def castanets_like(seed: int, duration: float = 1.5, rate: int = MUSIC_RATE):
    rng = np.random.default_rng(seed)
    t = np.arange(int(duration * rate)) / rate
    onsets = np.cumsum(rng.uniform(0.06, 0.18, size=20))
    onsets = onsets[onsets < duration - 0.05]
    x = np.zeros_like(t)
    for t0 in onsets:
        env = _envelope(t, [t0], 0.0002, 0.004)
        x += env * (rng.standard_normal(t.size) * 0.5 + np.sin(2 * np.pi * rng.uniform(1800, 2600) * t))
    return x / np.abs(x).max() * 0.8, rate


def glockenspiel_like(seed: int, duration: float = 1.5, rate: int = MUSIC_RATE):
    rng = np.random.default_rng(seed)
    t = np.arange(int(duration * rate)) / rate
    x = np.zeros_like(t)
    ratios = (1.0, 2.76, 5.40, 8.93)
    for t0, f in zip((0.05, 0.35, 0.6, 1.0), (1046.5, 1318.5, 1568.0, 2093.0)):
        for k, rk in enumerate(ratios):
            fk = f * rk
            if fk > rate / 2 - 1000:
                continue
            env = _envelope(t, [t0], 0.0005, 0.8 / (1 + 2 * k))
            x += env * 0.7**k * np.sin(2 * np.pi * fk * (t - t0) + rng.uniform(0, 2 * np.pi))
    return x / np.abs(x).max() * 0.8, rate


def flute_like(seed: int, duration: float = 1.5, rate: int = MUSIC_RATE):
    rng = np.random.default_rng(seed)
    t = np.arange(int(duration * rate)) / rate
    f = 587.33 * (1 + 0.006 * np.sin(2 * np.pi * 5.5 * t))
    ph = 2 * np.pi * np.cumsum(f) / rate
    env = np.minimum(1, t / 0.08) * np.minimum(1, (duration - t) / 0.1)
    x = sum(0.5**k * np.sin((k + 1) * ph + rng.uniform(0, 2 * np.pi)) for k in range(6))
    x = x + 0.02 * rng.standard_normal(t.size)
    return x * env / np.abs(x * env).max() * 0.8, rate


def drums_like(seed: int, duration: float = 1.5, rate: int = MUSIC_RATE):
    rng = np.random.default_rng(seed)
    t = np.arange(int(duration * rate)) / rate
    x = np.zeros_like(t)
    for t0 in (0.05, 0.8):  # kick: falling pitch
        d = np.clip(t - t0, 0, None)
        f = 50 + 100 * np.exp(-d / 0.03)
        ph = 2 * np.pi * np.cumsum(f) / rate
        x += _envelope(t, [t0], 0.001, 0.15) * np.sin(ph)
    for t0 in (0.45, 1.2):  # snare: noise plus body
        env = _envelope(t, [t0], 0.0005, 0.08)
        x += 0.6 * env * (rng.standard_normal(t.size) + np.sin(2 * np.pi * 190 * t))
    return x / np.abs(x).max() * 0.8, rate


def speech_chirp(L: int = 2048, seed: int = 0) -> np.ndarray:
    """Short harmonic chirp with a syllable envelope, for high-redundancy tests."""
    rng = np.random.default_rng(seed)
    l = np.arange(L)
    # normalised frequency rising from 0.02 to 0.05 cycles/sample
    inst = 0.02 + 0.03 * l / L
    ph = 2 * np.pi * np.cumsum(inst)
    x = sum(
        (0.8**k) * np.sin((k + 1) * ph + rng.uniform(0, 2 * np.pi)) for k in range(5)
    )
    env = np.exp(-0.5 * ((l - L / 2) / (L / 5)) ** 2)
    return x * env / np.abs(x * env).max()


SPEECH_ITEMS = {
    "speech_m1": lambda: speech_like(1, f0=110.0),
    "speech_f1": lambda: speech_like(2, f0=210.0),
    "speech_m2": lambda: speech_like(3, f0=95.0),
    "speech_f2": lambda: speech_like(4, f0=180.0),
    "speech_c1": lambda: speech_like(5, f0=260.0),
}

MUSIC_ITEMS = {
    "piano": lambda: piano_like(11),
    "castanets": lambda: castanets_like(12),
    "glockenspiel": lambda: glockenspiel_like(13),
    "flute": lambda: flute_like(14),
    "drums": lambda: drums_like(15),
}


def write_corpus(root, which=("speech", "music")) -> dict[str, list[Path]]:
    """Write the synthetic corpus as PCM16 WAVs under ``root/<set>/<name>.wav``."""
    root = Path(root)
    sets = {"speech": SPEECH_ITEMS, "music": MUSIC_ITEMS}
    out = {}
    for name in which:
        d = root / name
        d.mkdir(parents=True, exist_ok=True)
        out[name] = []
        for item, make in sets[name].items():
            x, rate = make()
            path = d / f"{item}.wav"
            save_wav(path, x, rate)
            out[name].append(path)
    return out
