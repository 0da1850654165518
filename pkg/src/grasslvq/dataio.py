"""Dataset ingestion, model persistence, and artifact exporters.

File formats:
  * IDX (big-endian, magics 0x00000803 / 0x00000801) for MNIST-style data,
  * binary 8-bit PGM (P5) for image frames, prototype images, and influence maps,
  * CSV with ',' separators and '\\n' line endings for everything plottable,
  * a versioned binary model file (header line, length-prefixed float64
    little-endian payload, trailing CRC32).

Ingested image vectors are scaled to [0, 1] and then L2-normalized, so every
column entering a subspace construction has unit norm.
"""

import os
import struct
import zlib

import numpy as np

from .errors import (
    BadMagic,
    CorruptModel,
    CountMismatch,
    EmptySet,
    InconsistentDims,
    InsufficientImages,
    TruncatedFile,
    UnsupportedFormat,
    VersionMismatch,
)
from .manifold import (
    Subspace,
    adaptive_squared_distance,
    principal_decomposition,
    subspace_from_set,
)
from .model import ModelState, Prototype

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801
MODEL_MAGIC = "GRASSLVQ"
MODEL_VERSION = 1


# ---------------------------------------------------------------- IDX

def _read_exact(f, n, path):
    data = f.read(n)
    if len(data) != n:
        raise TruncatedFile(f"{path}: expected {n} more bytes, got {len(data)}")
    return data


def read_idx_images(path) -> np.ndarray:
    """Read an IDX image file into an (n, D) float64 array of unit-norm rows."""
    with open(path, "rb") as f:
        magic, count, rows, cols = struct.unpack(">iiii", _read_exact(f, 16, path))
        if magic != IDX_IMAGES_MAGIC:
            raise BadMagic(f"{path}: magic 0x{magic:08x}, expected 0x{IDX_IMAGES_MAGIC:08x}")
        raw = _read_exact(f, count * rows * cols, path)
    images = np.frombuffer(raw, dtype=np.uint8).reshape(count, rows * cols)
    images = images.astype(np.float64) / 255.0
    norms = np.linalg.norm(images, axis=1)
    norms[norms == 0] = 1.0
    return images / norms[:, None], rows, cols


def read_idx_labels(path) -> np.ndarray:
    """Read an IDX label file into an (n,) integer array."""
    with open(path, "rb") as f:
        magic, count = struct.unpack(">ii", _read_exact(f, 8, path))
        if magic != IDX_LABELS_MAGIC:
            raise BadMagic(f"{path}: magic 0x{magic:08x}, expected 0x{IDX_LABELS_MAGIC:08x}")
        raw = _read_exact(f, count, path)
    return np.frombuffer(raw, dtype=np.uint8).astype(np.int64)


def read_idx_dataset(images_path, labels_path):
    """Read paired IDX files; returns (images (n, D), labels (n,), rows, cols)."""
    images, rows, cols = read_idx_images(images_path)
    labels = read_idx_labels(labels_path)
    if images.shape[0] != labels.shape[0]:
        raise CountMismatch(
            f"{images.shape[0]} images vs {labels.shape[0]} labels"
        )
    return images, labels, rows, cols


# ---------------------------------------------------------------- PGM

def read_pgm(path) -> np.ndarray:
    """Read a binary 8-bit PGM (P5) file into an (h, w) uint8 array."""
    with open(path, "rb") as f:
        data = f.read()
    if not data.startswith(b"P5"):
        raise UnsupportedFormat(f"{path}: not a binary PGM (P5) file")
    # header: magic, width, height, maxval as whitespace-separated tokens,
    # '#' comments allowed through the end of line
    tokens, pos = [], 2
    while len(tokens) < 3:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise TruncatedFile(f"{path}: header ends early")
        tokens.append(data[start:pos])
    pos += 1  # single whitespace after maxval
    try:
        width, height, maxval = (int(t) for t in tokens)
    except ValueError:
        raise UnsupportedFormat(f"{path}: malformed PGM header") from None
    if maxval != 255:
        raise UnsupportedFormat(f"{path}: only 8-bit PGM supported (maxval={maxval})")
    pixels = data[pos:pos + width * height]
    if len(pixels) != width * height:
        raise TruncatedFile(f"{path}: expected {width * height} pixels, got {len(pixels)}")
    return np.frombuffer(pixels, dtype=np.uint8).reshape(height, width)


def write_pgm(path, image: np.ndarray) -> None:
    """Write an (h, w) uint8 array as a binary PGM (P5) file."""
    image = np.asarray(image, dtype=np.uint8)
    h, w = image.shape
    with open(path, "wb") as f:
        f.write(f"P5\n{w} {h}\n255\n".encode())
        f.write(image.tobytes())


# ---------------------------------------------------------------- image-set dirs

def read_imageset_dirs(root):
    """Read the root/<class>/<set>/<frame>.pgm layout into labeled data matrices.

    Returns (sets, width, height) where sets is a list of (D x m matrix, label)
    with unit-norm columns. Class ids follow sorted class-directory order
    (1-based); a ``labels.txt`` manifest at the root ("<class_dir> <label>"
    per line) overrides them.
    """
    class_dirs = sorted(
        e for e in os.listdir(root) if os.path.isdir(os.path.join(root, e))
    )
    if not class_dirs:
        raise EmptySet(f"{root}: no class directories")
    labels = {name: i + 1 for i, name in enumerate(class_dirs)}
    manifest = os.path.join(root, "labels.txt")
    if os.path.isfile(manifest):
        with open(manifest) as f:
            for line in f:
                line = line.strip()
                if line and not line.startswith("#"):
                    name, lab = line.split()
                    labels[name] = int(lab)

    sets, dims = [], None
    for class_dir in class_dirs:
        class_path = os.path.join(root, class_dir)
        set_dirs = sorted(
            e for e in os.listdir(class_path)
            if os.path.isdir(os.path.join(class_path, e))
        )
        for set_dir in set_dirs:
            set_path = os.path.join(class_path, set_dir)
            frames = sorted(e for e in os.listdir(set_path) if e.endswith(".pgm"))
            if not frames:
                raise EmptySet(f"{set_path}: no .pgm frames")
            columns = []
            for frame in frames:
                img = read_pgm(os.path.join(set_path, frame))
                if dims is None:
                    dims = img.shape
                elif img.shape != dims:
                    raise InconsistentDims(
                        f"{set_path}/{frame}: {img.shape} differs from {dims}"
                    )
                vec = img.astype(np.float64).ravel() / 255.0
                norm = np.linalg.norm(vec)
                columns.append(vec / norm if norm > 0 else vec)
            sets.append((np.column_stack(columns), labels[class_dir]))
    height, width = dims
    return sets, width, height


# ---------------------------------------------------------------- subspace datasets

def build_classwise_subspace_dataset(images, labels, d, m, sets_per_class, seed):
    """Sample subspaces per class from single images (for image classification).

    For each class, draws ``sets_per_class`` independent groups of ``m`` images
    (without replacement within a group) and converts each group to a
    d-dimensional subspace. Deterministic under the seed.
    """
    if m < d:
        raise ValueError(f"m={m} must be >= d={d}")
    rng = np.random.default_rng(seed)
    dataset = []
    for label in np.unique(labels):
        idx = np.flatnonzero(labels == label)
        if len(idx) < m:
            raise InsufficientImages(
                f"class {label}: {len(idx)} images < m={m}"
            )
        for _ in range(sets_per_class):
            pick = rng.choice(idx, size=m, replace=False)
            X = images[pick].T  # D x m
            dataset.append((subspace_from_set(X, d), int(label)))
    return dataset


def build_per_set_subspace_dataset(sets, d):
    """One d-dimensional subspace per image set (for image-set classification)."""
    dataset = []
    for i, (X, label) in enumerate(sets):
        try:
            dataset.append((subspace_from_set(X, d), int(label)))
        except Exception as exc:
            exc.args = (f"set {i} (label {label}): {exc}",)
            raise
    return dataset


def class_image_matrices(images, labels):
    """Per-class D x n matrices of all images, for PCA prototype initialization."""
    return {int(lab): images[np.flatnonzero(labels == lab)].T
            for lab in np.unique(labels)}


# ---------------------------------------------------------------- model persistence

def save_model(model: ModelState, path) -> None:
    """Write a model file: header line, float64-LE payload with length prefix, CRC32."""
    header = (
        f"{MODEL_MAGIC} v{MODEL_VERSION} mode={model.mode} "
        f"D={model.ambient_dim} d={model.subspace_dim} "
        f"labels={','.join(str(p.label) for p in model.prototypes)}\n"
    )
    parts = [p.subspace.basis for p in model.prototypes] + [model.relevance]
    payload = np.concatenate([a.ravel() for a in parts]).astype("<f8").tobytes()
    with open(path, "wb") as f:
        f.write(header.encode())
        f.write(struct.pack("<Q", len(payload) // 8))
        f.write(payload)
        f.write(struct.pack("<I", zlib.crc32(payload)))


def load_model(path) -> ModelState:
    """Read a model file written by save_model; bit-exact round trip."""
    with open(path, "rb") as f:
        header = f.readline().decode(errors="replace").strip()
        fields = header.split()
        if len(fields) < 2 or fields[0] != MODEL_MAGIC:
            raise CorruptModel(f"{path}: unrecognized header")
        if fields[1] != f"v{MODEL_VERSION}":
            raise VersionMismatch(f"{path}: format {fields[1]}, expected v{MODEL_VERSION}")
        meta = dict(field.split("=", 1) for field in fields[2:])
        mode = meta["mode"]
        D, d = int(meta["D"]), int(meta["d"])
        labels = [int(t) for t in meta["labels"].split(",")]
        raw = f.read()
    if len(raw) < 8:
        raise CorruptModel(f"{path}: missing length prefix")
    (count,) = struct.unpack("<Q", raw[:8])
    payload = raw[8:8 + count * 8]
    if len(payload) != count * 8 or len(raw) < 8 + count * 8 + 4:
        raise CorruptModel(f"{path}: truncated payload")
    (crc,) = struct.unpack("<I", raw[8 + count * 8: 8 + count * 8 + 4])
    if zlib.crc32(payload) != crc:
        raise CorruptModel(f"{path}: checksum failure")
    values = np.frombuffer(payload, dtype="<f8")
    if count != len(labels) * D * d + d:
        raise CorruptModel(f"{path}: payload size inconsistent with header")
    protos = []
    for i, label in enumerate(labels):
        basis = values[i * D * d:(i + 1) * D * d].reshape(D, d)
        protos.append(Prototype(Subspace(basis), label))
    relevance = values[len(labels) * D * d:].copy()
    return ModelState(protos, relevance, mode, d, D)


# ---------------------------------------------------------------- exporters

def export_relevance_csv(model: ModelState, path) -> None:
    with open(path, "w") as f:
        f.write("index,lambda\n")
        for i, lam in enumerate(model.relevance):
            f.write(f"{i + 1},{float(lam)!r}\n")


def _rescale_full_range(values):
    lo, hi = values.min(), values.max()
    scale = hi - lo
    if scale == 0:
        return np.zeros_like(values, dtype=np.uint8), lo, hi
    return np.clip(np.rint((values - lo) / scale * 255), 0, 255).astype(np.uint8), lo, hi


def export_prototype_images(model: ModelState, proto_index, width, height, out_dir) -> None:
    """One PGM per principal vector of the prototype, rescaled to full 8-bit range.

    The per-image rescaling intervals are documented in a ``rescale.txt``
    sidecar so pixel values can be mapped back.
    """
    proto = model.prototypes[proto_index]
    if width * height != model.ambient_dim:
        raise ValueError("width*height must equal the ambient dimension")
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "rescale.txt"), "w") as sidecar:
        sidecar.write(f"prototype {proto_index} label {proto.label}\n")
        sidecar.write("pixel = min + raw/255 * (max - min)\n")
        for k in range(model.subspace_dim):
            column = proto.subspace.basis[:, k]
            img, lo, hi = _rescale_full_range(column)
            name = f"prototype_{proto_index}_vector_{k + 1}.pgm"
            write_pgm(os.path.join(out_dir, name), img.reshape(height, width))
            sidecar.write(f"{name} min={float(lo)!r} max={float(hi)!r}\n")


def export_pixel_influence(pd, index, width, height, path) -> None:
    """Influence map for one principal angle, rescaled symmetrically around 0."""
    from .manifold import pixel_influence

    values = pixel_influence(pd, index)
    if width * height != values.shape[0]:
        raise ValueError("width*height must equal the ambient dimension")
    bound = np.max(np.abs(values))
    if bound == 0:
        img = np.full(values.shape, 128, dtype=np.uint8)
    else:
        img = np.clip(np.rint((values / bound + 1.0) * 127.5), 0, 255).astype(np.uint8)
    write_pgm(path, img.reshape(height, width))


def export_distance_matrix_csv(model: ModelState, dataset, path) -> None:
    """Symmetric (N+p) x (N+p) matrix of pairwise adaptive squared distances.

    Rows/columns list the N dataset subspaces first, then the p prototypes;
    the header names each column. External embedding tools (e.g. t-SNE)
    consume this matrix directly.
    """
    subspaces = [s.subspace if hasattr(s, "subspace") else s for s, _ in dataset]
    names = [f"sample_{i + 1}" for i in range(len(subspaces))]
    subspaces += [p.subspace for p in model.prototypes]
    names += [f"prototype_{i + 1}" for i in range(len(model.prototypes))]
    n = len(subspaces)
    dist = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            pd = principal_decomposition(subspaces[i], subspaces[j])
            dist[i, j] = dist[j, i] = adaptive_squared_distance(pd, model.relevance)
    with open(path, "w") as f:
        f.write(",".join(names) + "\n")
        for row in dist:
            f.write(",".join(repr(float(v)) for v in row) + "\n")
