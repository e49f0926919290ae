"""Seeded generators for the toy, expander, tomography and deblurring instances."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import ManifoldKind
from .linops import NonnegativeSparseMatrix
from .objective import KlProblem

B_FLOOR_REL = 1e-6
_MASK64 = (1 << 64) - 1


class SplitMix64:
    """SplitMix64 (Steele, Lea, Flood 2014): 64-bit state, golden-gamma increment.

    Doubles take the top 53 bits; bounded integers use rejection sampling, so
    a given seed yields the same stream on every platform.
    """

    GAMMA = 0x9E3779B97F4A7C15

    def __init__(self, seed: int):
        self.state = int(seed) & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + self.GAMMA) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def random(self) -> float:
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def below(self, n: int) -> int:
        """Uniform integer in [0, n)."""
        if n <= 0:
            raise ValueError("bound must be positive")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            r = self.next_u64()
            if r < limit:
                return r % n

    def sample(self, n: int, k: int) -> list[int]:
        """k distinct values from range(n) by partial Fisher-Yates, in draw order."""
        if not 0 <= k <= n:
            raise ValueError(f"cannot draw {k} distinct values from {n}")
        pool = list(range(n))
        for i in range(k):
            j = i + self.below(n - i)
            pool[i], pool[j] = pool[j], pool[i]
        return pool[:k]

    def uniform_array(self, size: int, low: float = 0.0, high: float = 1.0) -> np.ndarray:
        return np.array([low + (high - low) * self.random() for _ in range(size)])

    def split(self) -> "SplitMix64":
        return SplitMix64(self.next_u64())


@dataclass
class GroundTruthInstance:
    problem: KlProblem
    x_true: np.ndarray
    b_clean: np.ndarray
    noise: np.ndarray
    seed: int = 0
    name: str = ""
    image_shape: tuple[int, int] | None = None
    meta: dict = field(default_factory=dict)

    @property
    def A(self) -> NonnegativeSparseMatrix:
        return self.problem.A

    @property
    def b(self) -> np.ndarray:
        return self.problem.b


def _floor_measurements(b_clean, noise):
    b = b_clean + noise
    floor = B_FLOOR_REL * float(np.max(b_clean)) if np.max(b_clean) > 0 else B_FLOOR_REL
    b = np.where(b <= 0, floor, b)
    return b, b - b_clean


def toy_problem() -> GroundTruthInstance:
    """One measurement b = 1 of x = (1, 1) through A = (0.25, 0.75), on the box."""
    A = NonnegativeSparseMatrix.from_dense([[0.25, 0.75]])
    x_true = np.array([1.0, 1.0])
    b_clean = A.matvec(x_true)
    return GroundTruthInstance(
        problem=KlProblem(A, b_clean, ManifoldKind.BOX),
        x_true=x_true,
        b_clean=b_clean,
        noise=np.zeros(1),
        name="toy",
    )


def expander_instance(
    m: int = 40, n: int = 200, col_weight: int = 12, sparsity: int = 20, seed: int = 0
) -> GroundTruthInstance:
    """Binary A with exactly ``col_weight`` ones per column and a binary ``sparsity``-sparse signal.

    Zero measurements are lifted to 1e-6 max(b_clean); the lift is recorded as noise.
    """
    if not (0 < col_weight <= m and 0 <= sparsity <= n and n > 0):
        raise ValueError("need 0 < col_weight <= m and 0 <= sparsity <= n")
    rng = SplitMix64(seed)
    rows, cols = [], []
    for j in range(n):
        for i in sorted(rng.sample(m, col_weight)):
            rows.append(i)
            cols.append(j)
    if len(set(rows)) < m:
        raise ValueError(f"seed {seed} left a row of the expander empty; choose another seed")
    A = NonnegativeSparseMatrix.from_triplets((m, n), rows, cols, np.ones(len(rows)))
    x_true = np.zeros(n)
    x_true[rng.sample(n, sparsity)] = 1.0
    b_clean = A.matvec(x_true)
    b, noise = _floor_measurements(b_clean, np.zeros(m))
    return GroundTruthInstance(
        problem=KlProblem(A, b, ManifoldKind.BOX),
        x_true=x_true,
        b_clean=b_clean,
        noise=noise,
        seed=seed,
        name="expander",
        meta={"m": m, "n": n, "col_weight": col_weight, "sparsity": sparsity},
    )


def gaussian_blur_operator(height: int, width: int, mask: int = 9, sigma: float = 2.0) -> NonnegativeSparseMatrix:
    """Row-major (hw x hw) blur with a mask x mask Gaussian normalized to unit sum.

    Weights falling outside the image are dropped (zero padding), so only
    rows of pixels at least mask//2 away from the border sum to one.
    """
    if mask < 1 or mask % 2 == 0 or mask > min(height, width) or not sigma > 0:
        raise ValueError("mask must be odd, at most min(height, width), and sigma positive")
    r = mask // 2
    off = np.arange(-r, r + 1)
    g1 = np.exp(-(off**2) / (2.0 * sigma**2))
    kern = np.outer(g1, g1)
    kern /= kern.sum()
    pr, pc = np.divmod(np.arange(height * width), width)
    rows, cols, vals = [], [], []
    for a, da in enumerate(off):
        for c, dc in enumerate(off):
            qr, qc = pr + da, pc + dc
            ok = (qr >= 0) & (qr < height) & (qc >= 0) & (qc < width)
            rows.append(np.flatnonzero(ok))
            cols.append(qr[ok] * width + qc[ok])
            vals.append(np.full(int(ok.sum()), kern[a, c]))
    return NonnegativeSparseMatrix.from_triplets(
        (height * width, height * width), np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)
    )


def _ray_pixel_lengths(N: int, theta: float, s: float) -> np.ndarray:
    """Intersection length of the line {p : <p, (cos, sin)> = s} with each unit pixel.

    The image occupies [-N/2, N/2]^2; pixel (r, c) spans x in [c - N/2, c + 1 - N/2]
    and y in [N/2 - r - 1, N/2 - r] (row 0 on top). Slab clipping per pixel.
    """
    ct, st = math.cos(theta), math.sin(theta)
    p0 = np.array([s * ct, s * st])
    d = np.array([-st, ct])
    c = np.arange(N)
    xlo = (c - N / 2.0)[None, :].repeat(N, 0)
    ylo = (N / 2.0 - c - 1.0)[:, None].repeat(N, 1)
    t_lo = np.full((N, N), -np.inf)
    t_hi = np.full((N, N), np.inf)
    for k, lo in ((0, xlo), (1, ylo)):
        hi = lo + 1.0
        if abs(d[k]) < 1e-15:
            inside = (p0[k] >= lo) & (p0[k] < hi)
            t_lo = np.where(inside, t_lo, np.inf)
        else:
            a = (lo - p0[k]) / d[k]
            b = (hi - p0[k]) / d[k]
            t_lo = np.maximum(t_lo, np.minimum(a, b))
            t_hi = np.minimum(t_hi, np.maximum(a, b))
    length = np.clip(t_hi - t_lo, 0.0, None)
    length[~np.isfinite(length)] = 0.0
    return length.ravel()


def parallel_beam_tomography(image_size: int = 32, n_angles: int = 10, return_rays: bool = False):
    """Parallel-beam projector with ``image_size`` unit-spaced rays per angle.

    Angles are k pi / n_angles; entries are exact ray-pixel intersection lengths.
    Rays that miss the image are dropped; with ``return_rays`` the original
    ray index (angle * image_size + detector) of every kept row is returned too.
    """
    if image_size < 2 or n_angles < 1:
        raise ValueError("need image_size >= 2 and n_angles >= 1")
    N = image_size
    det = np.arange(N) - (N - 1) / 2.0
    rows, cols, vals, kept = [], [], [], []
    for a in range(n_angles):
        theta = math.pi * a / n_angles
        for j, s in enumerate(det):
            lengths = _ray_pixel_lengths(N, theta, float(s))
            nz = np.flatnonzero(lengths > 1e-14)
            if nz.size == 0:
                continue
            rows.append(np.full(nz.size, len(kept)))
            cols.append(nz)
            vals.append(lengths[nz])
            kept.append(a * N + j)
    A = NonnegativeSparseMatrix.from_triplets(
        (len(kept), N * N), np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)
    )
    if return_rays:
        return A, np.array(kept, dtype=np.int64)
    return A


def rectangle_phantom(height: int, width: int, n_rect: int = 5, seed: int = 0) -> np.ndarray:
    """Binary image (row-major, flattened) made of seeded axis-aligned rectangles."""
    rng = SplitMix64(seed)
    img = np.zeros((height, width))
    for _ in range(n_rect):
        r0 = rng.below(height - 1)
        c0 = rng.below(width - 1)
        r1 = r0 + 1 + rng.below(max(1, (height - r0) // 2))
        c1 = c0 + 1 + rng.below(max(1, (width - c0) // 2))
        img[r0:r1, c0:c1] = 1.0
    return img.ravel()


def synthesize_measurements(
    A: NonnegativeSparseMatrix, x_true, noise_level: float = 0.0, seed: int = 0, name: str = ""
) -> GroundTruthInstance:
    """b = A x_true + e with e_i uniform in [-noise_level, noise_level] * mean(A x_true).

    Nonpositive measurements are lifted to 1e-6 max(A x_true).
    """
    x_true = np.asarray(x_true, dtype=np.float64)
    if np.any(x_true < 0) or np.any(x_true > 1):
        raise ValueError("x_true must lie in [0, 1]^n")
    if noise_level < 0:
        raise ValueError("noise_level must be nonnegative")
    b_clean = A.matvec(x_true)
    if noise_level > 0:
        rng = SplitMix64(seed)
        scale = noise_level * float(np.mean(b_clean))
        e = rng.uniform_array(b_clean.size, -scale, scale)
    else:
        e = np.zeros_like(b_clean)
    b, noise = _floor_measurements(b_clean, e)
    return GroundTruthInstance(
        problem=KlProblem(A, b, ManifoldKind.BOX),
        x_true=x_true,
        b_clean=b_clean,
        noise=noise,
        seed=seed,
        name=name,
        meta={"noise_level": noise_level},
    )


def tomography_instance(image_size: int = 32, n_angles: int = 10, noise_level: float = 0.0, seed: int = 0):
    A = parallel_beam_tomography(image_size, n_angles)
    x = rectangle_phantom(image_size, image_size, seed=seed)
    inst = synthesize_measurements(A, x, noise_level, seed, name="tomo")
    inst.image_shape = (image_size, image_size)
    inst.meta.update(image_size=image_size, n_angles=n_angles)
    return inst


def blur_instance(image_size: int = 32, mask: int = 9, sigma: float = 2.0, noise_level: float = 0.0, seed: int = 0):
    A = gaussian_blur_operator(image_size, image_size, mask, sigma)
    x = rectangle_phantom(image_size, image_size, seed=seed)
    inst = synthesize_measurements(A, x, noise_level, seed, name="blur")
    inst.image_shape = (image_size, image_size)
    inst.meta.update(image_size=image_size, mask=mask, sigma=sigma)
    return inst
