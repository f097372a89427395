import numpy as np
import pytest

from noisekit.audio_io import save_wav
from noisekit.spectral import FrameGeometry
from noisekit.synth import colored_noise, gamma_speech_buffer, harmonic_utterance
from noisekit.wada import default_gain_table


@pytest.fixture(scope="session")
def gain_table():
    return default_gain_table()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def geometry():
    return FrameGeometry()


def write_corpus(directory, n, kind="harmonic", seed=0, seconds=1.0):
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for i in range(n):
        r = np.random.default_rng([seed, i])
        if kind == "harmonic":
            buf = harmonic_utterance(r, seconds=seconds)
        elif kind == "gamma":
            buf = gamma_speech_buffer(r, seconds=seconds)
        else:
            buf = colored_noise(r, seconds=seconds)
        path = directory / f"utt{i:03d}.wav"
        save_wav(buf, path)
        paths.append(str(path))
    return paths
