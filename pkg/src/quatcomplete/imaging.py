"""Color image <-> pure quaternion codec, observation masks, and projection.

A color image is an (M, N, 3) float array with values in [0, 255]; a pixel
becomes the pure quaternion r*i + g*j + b*k.  Observation is per pixel: a
mask element covers one quaternion entry, so the three channel values of a
pixel are jointly observed or jointly missing.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from PIL import Image

from ._errors import ConfigError, DataError
from .quatmat import QuaternionMatrix

__all__ = [
    "ObservationMask",
    "encode_image",
    "decode_image",
    "sample_mask",
    "project_omega",
    "validate_image",
    "load_image",
    "save_image",
    "sample_image_path",
]

REAL_RESIDUE_WARN = 1e-6


def validate_image(image, check_range: bool = True) -> np.ndarray:
    """Coerce to an (M, N, 3) float64 image array, or raise DataError."""
    arr = np.asarray(image, dtype=float)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise DataError(f"expected an (M, N, 3) image array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DataError("image contains non-finite values")
    if check_range and (arr.min() < 0.0 or arr.max() > 255.0):
        raise DataError("image values must lie in [0, 255]")
    return arr


def encode_image(image) -> QuaternionMatrix:
    """Encode RGB channels as the imaginary parts of a pure quaternion matrix."""
    arr = validate_image(image)
    zero = np.zeros(arr.shape[:2])
    return QuaternionMatrix(zero, arr[:, :, 0], arr[:, :, 1], arr[:, :, 2])


def decode_image(q: QuaternionMatrix, clamp: bool = True) -> np.ndarray:
    """Back to an (M, N, 3) array; the real component is dropped.

    Warns when the discarded real component is non-negligible, which flags a
    matrix that was not (close to) pure.
    """
    residue = float(np.max(np.abs(q.q0), initial=0.0))
    if residue > REAL_RESIDUE_WARN:
        warnings.warn(
            f"discarding real quaternion component with max magnitude {residue:.3g}",
            stacklevel=2,
        )
    out = np.stack([q.q1, q.q2, q.q3], axis=2)
    if clamp:
        out = np.clip(out, 0.0, 255.0)
    return out


@dataclass(frozen=True)
class ObservationMask:
    """Observed pixel set with its sampling-ratio and seed metadata.

    `observed` is an (M, N) boolean array; `seed` is the sampler seed or the
    string "explicit" for masks built from explicit indices.
    """

    observed: np.ndarray
    sampling_ratio: float
    seed: object = "explicit"

    def __post_init__(self):
        obs = np.asarray(self.observed, dtype=bool)
        obs = np.array(obs, copy=True)
        obs.setflags(write=False)
        object.__setattr__(self, "observed", obs)

    @property
    def shape(self) -> tuple:
        return self.observed.shape

    @property
    def n_observed(self) -> int:
        return int(np.count_nonzero(self.observed))

    @property
    def indices(self) -> np.ndarray:
        """Observed (row, col) pairs sorted row-major, shape (n_observed, 2)."""
        rows, cols = np.nonzero(self.observed)
        return np.stack([rows, cols], axis=1)

    def complement(self) -> "ObservationMask":
        m, n = self.shape
        total = m * n
        ratio = (total - self.n_observed) / total if total else 0.0
        return ObservationMask(~self.observed, ratio, "explicit")

    @classmethod
    def from_indices(cls, m: int, n: int, pairs, seed="explicit") -> "ObservationMask":
        obs = np.zeros((m, n), dtype=bool)
        for r, c in pairs:
            if not (0 <= r < m and 0 <= c < n):
                raise DataError(f"mask index ({r}, {c}) out of range for {m}x{n}")
            obs[r, c] = True
        ratio = float(np.count_nonzero(obs)) / (m * n) if m * n else 0.0
        return cls(obs, ratio, seed)

    @classmethod
    def full(cls, m: int, n: int) -> "ObservationMask":
        return cls(np.ones((m, n), dtype=bool), 1.0, "explicit")

    @classmethod
    def empty(cls, m: int, n: int) -> "ObservationMask":
        return cls(np.zeros((m, n), dtype=bool), 0.0, "explicit")

    # -- text persistence: header "M N SR SEED", then "row,col" lines ----

    def save(self, path) -> None:
        lines = [f"{self.shape[0]} {self.shape[1]} {self.sampling_ratio!r} {self.seed}"]
        lines += [f"{r},{c}" for r, c in self.indices]
        with open(path, "w", encoding="ascii") as fh:
            fh.write("\n".join(lines) + "\n")

    @classmethod
    def load(cls, path) -> "ObservationMask":
        with open(path, "r", encoding="ascii") as fh:
            lines = [ln.strip() for ln in fh if ln.strip()]
        if not lines:
            raise DataError(f"empty mask file: {path}")
        head = lines[0].split()
        if len(head) != 4:
            raise DataError(f"bad mask header in {path!s}: {lines[0]!r}")
        m, n = int(head[0]), int(head[1])
        sr = float(head[2])
        seed = head[3] if head[3] == "explicit" else int(head[3])
        pairs = []
        for ln in lines[1:]:
            r, c = ln.split(",")
            pairs.append((int(r), int(c)))
        mask = cls.from_indices(m, n, pairs, seed=seed)
        return cls(mask.observed, sr, seed)


def sample_mask(m: int, n: int, sr: float, seed: int) -> ObservationMask:
    """Uniform pixel sample without replacement; reproducible for a fixed seed."""
    if not (0.0 <= sr <= 1.0):
        raise ConfigError(f"sampling ratio must lie in [0, 1], got {sr}")
    total = m * n
    count = int(np.floor(sr * total + 0.5))
    rng = np.random.default_rng(seed)
    flat = rng.choice(total, size=count, replace=False)
    obs = np.zeros(total, dtype=bool)
    obs[flat] = True
    return ObservationMask(obs.reshape(m, n), sr, int(seed))


def project_omega(x: QuaternionMatrix, omega: ObservationMask) -> QuaternionMatrix:
    """Keep entries on the observed set, zero elsewhere."""
    if x.shape != omega.shape:
        raise DataError(f"mask shape {omega.shape} does not match matrix {x.shape}")
    keep = omega.observed
    return QuaternionMatrix(*[np.where(keep, p, 0.0) for p in x.planes])


# -- file I/O -----------------------------------------------------------

def load_image(path) -> np.ndarray:
    """Read an image file as an (M, N, 3) float array in [0, 255].

    Alpha channels are ignored with a warning; other modes are converted
    to RGB.
    """
    try:
        img = Image.open(path)
        img.load()
    except (OSError, ValueError) as exc:
        raise DataError(f"cannot read image {path!s}: {exc}") from exc
    if img.mode == "RGBA":
        warnings.warn(f"ignoring alpha channel in {path!s}", stacklevel=2)
        img = img.convert("RGB")
    elif img.mode != "RGB":
        img = img.convert("RGB")
    return np.asarray(img, dtype=float)


def save_image(path, image) -> None:
    arr = validate_image(image, check_range=False)
    data = np.clip(np.rint(arr), 0, 255).astype(np.uint8)
    Image.fromarray(data, mode="RGB").save(path)


def sample_image_path() -> str:
    """Path of the bundled 64x64 test image."""
    from importlib import resources

    return str(resources.files("quatcomplete").joinpath("data", "sample64.png"))
