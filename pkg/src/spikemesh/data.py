"""Dataset ingestion and synthetic desk-scale data.

Pixel data uses the standard IDX byte layout (big-endian magic, dims,
raw bytes).  Stories use a line-oriented text format: one sentence per
line, then a question line of the form ``? word word ... -> answer``, with
blank lines separating stories.  Word-id maps are plain ``word<TAB>id``
lines generated from the corpus.

The synthetic generators produce digit-like binary images (rings vs
strokes) and key-value association stories; they stand in for the full
datasets, which are not bundled, while exercising identical file paths.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .config import rng_for

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801


class DataError(ValueError):
    pass


def write_idx_images(path, images: np.ndarray):
    images = np.asarray(images, dtype=np.uint8)
    n, rows, cols = images.shape
    with open(path, "wb") as f:
        f.write(struct.pack(">IIII", IDX_IMAGES_MAGIC, n, rows, cols))
        f.write(images.tobytes())


def write_idx_labels(path, labels: np.ndarray):
    labels = np.asarray(labels, dtype=np.uint8)
    with open(path, "wb") as f:
        f.write(struct.pack(">II", IDX_LABELS_MAGIC, labels.size))
        f.write(labels.tobytes())


def read_idx(path) -> np.ndarray:
    with open(path, "rb") as f:
        magic = struct.unpack(">I", f.read(4))[0]
        ndim = magic & 0xFF
        dtype_code = (magic >> 8) & 0xFF
        if dtype_code != 0x08:
            raise DataError(f"unsupported IDX element type 0x{dtype_code:02x}")
        dims = struct.unpack(">" + "I" * ndim, f.read(4 * ndim))
        data = np.frombuffer(f.read(), dtype=np.uint8)
    if data.size != int(np.prod(dims)):
        raise DataError(f"IDX payload size mismatch in {path}")
    return data.reshape(dims)


# ---------------------------------------------------------------------------
# Synthetic digits (rings vs strokes)
# ---------------------------------------------------------------------------


def synthetic_digits(n: int, seed: int = 0, size: int = 14):
    """Digit-like images: class 0 draws an ellipse ring, class 1 a stroke.

    Returns uint8 images (n, size, size) and labels (n,).
    """
    rng = rng_for(seed, "synthetic-digits")
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    images = np.zeros((n, size, size), dtype=np.uint8)
    labels = rng.integers(0, 2, size=n).astype(np.uint8)
    c = (size - 1) / 2.0
    for k in range(n):
        cy = c + rng.normal(0, size * 0.04)
        cx = c + rng.normal(0, size * 0.04)
        bright = rng.integers(170, 256)
        canvas = np.zeros((size, size))
        if labels[k] == 0:
            ry = size * (0.30 + 0.06 * rng.random())
            rx = size * (0.20 + 0.06 * rng.random())
            r = np.sqrt(((yy - cy) / ry) ** 2 + ((xx - cx) / rx) ** 2)
            ring = np.exp(-(((r - 1.0) / 0.18) ** 2))
            canvas = bright * ring
        else:
            slope = rng.normal(0, 0.15)
            length = size * (0.55 + 0.2 * rng.random())
            for yv in np.linspace(cy - length / 2, cy + length / 2, 4 * size):
                xv = cx + slope * (yv - cy)
                d2 = (yy - yv) ** 2 + (xx - xv) ** 2
                canvas = np.maximum(canvas, bright * np.exp(-d2 / 0.5))
        canvas += rng.normal(0, 6, size=(size, size))
        images[k] = np.clip(canvas, 0, 255).astype(np.uint8)
    return images, labels


def write_synthetic_digit_set(directory, n_train: int, n_test: int, seed: int = 0,
                              size: int = 14):
    """Emit train/test IDX files; returns the four paths."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    tr_img, tr_lab = synthetic_digits(n_train, seed=seed, size=size)
    te_img, te_lab = synthetic_digits(n_test, seed=seed + 1, size=size)
    paths = {
        "train_images": directory / "train-images-idx3-ubyte",
        "train_labels": directory / "train-labels-idx1-ubyte",
        "test_images": directory / "test-images-idx3-ubyte",
        "test_labels": directory / "test-labels-idx1-ubyte",
    }
    write_idx_images(paths["train_images"], tr_img)
    write_idx_labels(paths["train_labels"], tr_lab)
    write_idx_images(paths["test_images"], te_img)
    write_idx_labels(paths["test_labels"], te_lab)
    return paths


# ---------------------------------------------------------------------------
# Stories
# ---------------------------------------------------------------------------


def save_stories(path, stories):
    """``stories``: list of (sentences, question, answer) with word tokens."""
    lines = []
    for sentences, question, answer in stories:
        for s in sentences:
            lines.append(" ".join(s))
        lines.append("? " + " ".join(question) + " -> " + answer)
        lines.append("")
    Path(path).write_text("\n".join(lines))


def load_stories(path):
    stories = []
    sentences: list = []
    for raw in Path(path).read_text().splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("?"):
            body = line[1:].strip()
            if "->" not in body:
                raise DataError(f"question line lacks an answer token: {raw!r}")
            q, answer = body.rsplit("->", 1)
            stories.append((sentences, q.split(), answer.strip()))
            sentences = []
        else:
            sentences.append(line.split())
    if sentences:
        raise DataError("dangling sentences without a question line")
    return stories


def build_word_map(stories) -> dict:
    words = set()
    for sentences, question, answer in stories:
        for s in sentences:
            words.update(s)
        words.update(question)
        words.add(answer)
    return {w: i for i, w in enumerate(sorted(words))}


def save_word_map(path, word_map: dict):
    lines = [f"{w}\t{i}" for w, i in sorted(word_map.items(), key=lambda kv: kv[1])]
    Path(path).write_text("\n".join(lines) + "\n")


def load_word_map(path) -> dict:
    out = {}
    for line in Path(path).read_text().splitlines():
        if line.strip():
            w, i = line.rsplit("\t", 1)
            out[w] = int(i)
    return out


def story_to_ids(story, word_map):
    sentences, question, answer = story
    return (
        [[word_map[w] for w in s] for s in sentences],
        [word_map[w] for w in question],
        word_map[answer],
    )


def synthetic_pair_stories(n: int, m_sentences: int, n_keys: int = 6, seed: int = 0):
    """Key-value association stories: each sentence names a key and a value,
    the question names a key, the answer is its value."""
    rng = rng_for(seed, "pair-stories", m_sentences)
    keys = [f"k{i}" for i in range(n_keys)]
    vals = [f"v{i}" for i in range(n_keys)]
    stories = []
    for _ in range(n):
        ks = rng.choice(n_keys, size=m_sentences, replace=m_sentences > n_keys)
        vs = rng.integers(0, n_keys, size=m_sentences)
        sentences = [[keys[k], vals[v]] for k, v in zip(ks, vs)]
        probe = int(rng.integers(0, m_sentences))
        stories.append((sentences, [keys[ks[probe]]], vals[vs[probe]]))
    return stories


def random_stories(n: int, m_sentences: int, vocab: int, seed: int = 0,
                   max_words: int = 8):
    """Uniform filler stories over an integer vocabulary, for benchmarks."""
    rng = rng_for(seed, "random-stories", m_sentences)
    stories = []
    for _ in range(n):
        sentences = [
            list(rng.integers(0, vocab, size=int(rng.integers(2, max_words + 1))))
            for _ in range(m_sentences)
        ]
        question = list(rng.integers(0, vocab, size=3))
        stories.append((sentences, question, int(rng.integers(0, vocab))))
    return stories


# ---------------------------------------------------------------------------
# Teacher traces
# ---------------------------------------------------------------------------


def synthetic_teacher_values(encoded_sentences: np.ndarray, dim: int = 32,
                             seed: int = 0) -> np.ndarray:
    """Stable random linear recurrence over the input spikes; final state.

    Stands in for embedding targets produced by a conventional recurrent
    network; consumers only need (samples, dim) target vectors.
    """
    rng = rng_for(seed, "teacher")
    n, t_steps, n_in = encoded_sentences.shape
    w_x = rng.normal(0, 1.0 / np.sqrt(n_in), size=(n_in, dim))
    w_h = rng.normal(0, 0.9 / np.sqrt(dim), size=(dim, dim))
    h = np.zeros((n, dim))
    for t in range(t_steps):
        h = np.tanh(encoded_sentences[:, t] @ w_x + h @ w_h)
    return h


def save_teacher_traces(path, inputs: np.ndarray, values: np.ndarray):
    np.savez_compressed(path, inputs=inputs, values=values)


def load_teacher_traces(path):
    with np.load(path) as z:
        return z["inputs"], z["values"]
