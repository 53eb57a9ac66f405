"""Regenerates the fixture corpus: tone bursts over a faint noise floor."""

import math
import random
import struct
import sys
import wave
from pathlib import Path

RATE = 8000

# (relative path, total seconds, [(start, end, amplitude)])
FILES = [
    ("news/n01.wav", 14.0, [(1.0, 5.5, 0.5), (7.0, 12.0, 0.5)]),
    ("news/n02.wav", 50.0, [(1.0, 16.0, 0.5), (16.0, 16.3, 0.05), (16.3, 38.0, 0.5)]),
    ("talk/t01.wav", 12.0, [(0.5, 3.5, 0.4), (5.5, 10.5, 0.6)]),
    ("talk/t02.wav", 10.0, [(1.0, 2.0, 0.5), (4.0, 9.0, 0.5)]),
]


def render(total, bursts, seed):
    rng = random.Random(seed)
    n = int(total * RATE)
    out = [rng.uniform(-0.001, 0.001) for _ in range(n)]
    for start, end, amp in bursts:
        for i in range(int(start * RATE), min(n, int(end * RATE))):
            out[i] += amp * math.sin(2 * math.pi * 220.0 * i / RATE)
    return out


def write(path, samples):
    path.parent.mkdir(parents=True, exist_ok=True)
    with wave.open(str(path), "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(RATE)
        w.writeframes(b"".join(struct.pack("<h", int(max(-1.0, min(1.0, s)) * 32767)) for s in samples))


def main(root):
    for k, (rel, total, bursts) in enumerate(FILES):
        write(root / rel, render(total, bursts, 100 + k))


if __name__ == "__main__":
    main(Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).parent / "corpus")
