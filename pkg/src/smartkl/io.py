"""Plain-text persistence: vectors, key=value metadata, P2 graymaps, instance directories."""

from __future__ import annotations

import os
import tempfile
from pathlib import Path

import numpy as np

from .geometry import ManifoldKind
from .linops import NonnegativeSparseMatrix, from_coordinate_text
from .objective import KlProblem
from .problems import GroundTruthInstance

PGM_MAXVAL = 255


def atomic_write_text(path, text: str) -> None:
    """Write to a sibling temp file, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="ascii", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def format_vector(v) -> str:
    return "".join(f"{float(a)!r}\n" for a in np.asarray(v, dtype=np.float64))


def write_vector(path, v) -> None:
    atomic_write_text(path, format_vector(v))


def read_vector(path) -> np.ndarray:
    vals = []
    with open(path, encoding="ascii") as fh:
        for lineno, line in enumerate(fh, 1):
            s = line.strip()
            if not s or s.startswith("%"):
                continue
            try:
                vals.append(float(s))
            except ValueError:
                raise ValueError(f"{path}:{lineno}: not a number: {s!r}") from None
    return np.array(vals, dtype=np.float64)


def write_metadata(path, meta: dict) -> None:
    lines = []
    for k in sorted(meta):
        v = meta[k]
        if any(c in str(k) for c in "=\n") or "\n" in str(v):
            raise ValueError(f"metadata entry {k!r} cannot be written as key=value")
        lines.append(f"{k}={v}\n")
    atomic_write_text(path, "".join(lines))


def read_metadata(path) -> dict[str, str]:
    meta = {}
    with open(path, encoding="ascii") as fh:
        for lineno, line in enumerate(fh, 1):
            s = line.strip()
            if not s or s.startswith("#"):
                continue
            if "=" not in s:
                raise ValueError(f"{path}:{lineno}: expected key=value")
            k, v = s.split("=", 1)
            meta[k.strip()] = v.strip()
    return meta


def write_pgm(path, image, maxval: int = PGM_MAXVAL) -> None:
    """ASCII graymap of an image with values in [0, 1], scaled to 0..maxval."""
    img = np.asarray(image, dtype=np.float64)
    if img.ndim != 2:
        raise ValueError("image must be two-dimensional")
    q = np.rint(np.clip(img, 0.0, 1.0) * maxval).astype(int)
    h, w = q.shape
    rows = "".join(" ".join(map(str, r)) + "\n" for r in q)
    atomic_write_text(path, f"P2\n{w} {h}\n{maxval}\n{rows}")


def read_pgm(path) -> np.ndarray:
    """Read a P2 graymap back to values in [0, 1]."""
    tokens = []
    with open(path, encoding="ascii") as fh:
        for line in fh:
            tokens.extend(line.split("#", 1)[0].split())
    if not tokens or tokens[0] != "P2":
        raise ValueError(f"{path}: not an ASCII graymap (P2)")
    w, h, maxval = (int(t) for t in tokens[1:4])
    px = np.array([int(t) for t in tokens[4:]], dtype=np.float64)
    if px.size != w * h:
        raise ValueError(f"{path}: expected {w * h} pixels, found {px.size}")
    return (px / maxval).reshape(h, w)


def save_instance(inst: GroundTruthInstance, directory) -> Path:
    """Write matrix.mtx, b.txt, x_true.txt, b_clean.txt, noise.txt and meta.txt."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    atomic_write_text(d / "matrix.mtx", inst.A.to_coordinate_text())
    write_vector(d / "b.txt", inst.b)
    write_vector(d / "x_true.txt", inst.x_true)
    write_vector(d / "b_clean.txt", inst.b_clean)
    write_vector(d / "noise.txt", inst.noise)
    meta = {"name": inst.name, "seed": inst.seed, "kind": inst.problem.kind.value}
    meta.update(m=inst.A.shape[0], n=inst.A.shape[1], one_norm=repr(inst.problem.L))
    if inst.image_shape is not None:
        meta["image_shape"] = f"{inst.image_shape[0]}x{inst.image_shape[1]}"
    meta.update({f"param.{k}": v for k, v in inst.meta.items()})
    write_metadata(d / "meta.txt", meta)
    if inst.image_shape is not None:
        write_pgm(d / "x_true.pgm", inst.x_true.reshape(inst.image_shape))
    return d


def load_instance(directory, kind: ManifoldKind | str | None = None) -> GroundTruthInstance:
    d = Path(directory)
    with open(d / "matrix.mtx", encoding="ascii") as fh:
        A: NonnegativeSparseMatrix = from_coordinate_text(fh)
    meta = read_metadata(d / "meta.txt") if (d / "meta.txt").exists() else {}
    b = read_vector(d / "b.txt")
    x_true = read_vector(d / "x_true.txt") if (d / "x_true.txt").exists() else np.full(A.shape[1], np.nan)
    b_clean = read_vector(d / "b_clean.txt") if (d / "b_clean.txt").exists() else b.copy()
    noise = read_vector(d / "noise.txt") if (d / "noise.txt").exists() else b - b_clean
    kind = ManifoldKind(kind or meta.get("kind", "box"))
    shape = None
    if "image_shape" in meta:
        h, w = meta["image_shape"].split("x")
        shape = (int(h), int(w))
    params = {k[6:]: v for k, v in meta.items() if k.startswith("param.")}
    return GroundTruthInstance(
        problem=KlProblem(A, b, kind),
        x_true=x_true,
        b_clean=b_clean,
        noise=noise,
        seed=int(meta.get("seed", 0)),
        name=meta.get("name", d.name),
        image_shape=shape,
        meta=params,
    )
