"""
CEC2017-style test functions F1-F10.

Each base function takes ``z`` of shape ``(D,)`` or ``(n, D)`` and reduces
over the last axis. The per-function input scalings follow the CEC2017
reference code, so a base function expects ``z`` on the scale of the
[-100, 100] search box. Every base is zero at ``z = 0``; a composed function
``base(R (x - o)) + bias`` therefore attains its bias exactly at the shift.

Hybrid (F11-F20) and composition (F21-F30) functions are not built in; any
callable taking a position and returning a float can be optimized instead.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from core import ConfigurationError, RngStream, TransformLoadError

logger = logging.getLogger(__name__)

ORTHOGONALITY_TOLERANCE = 1e-9
SHIFT_RANGE = 80.0

# Schwefel's optimum coordinate
_SCHWEFEL_OFFSET = 4.209687462275036e002


def _as_batch(z) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    if z.shape[-1] < 2:
        raise ConfigurationError(
            f"benchmark functions need dimension >= 2, got {z.shape[-1]}"
        )
    return z


def _scalar_or_array(result, z: np.ndarray):
    if z.ndim == 1:
        return float(result)
    return result


def bent_cigar(z):
    z = _as_batch(z)
    result = z[..., 0] ** 2 + 1e6 * np.sum(z[..., 1:] ** 2, axis=-1)
    return _scalar_or_array(result, z)


def sum_diff_pow(z):
    """Sum of |z_i|^(i+1), i = 1..D. Magnitudes grow very quickly with D."""
    z = _as_batch(z)
    exponents = np.arange(2, z.shape[-1] + 2, dtype=float)
    result = np.sum(np.abs(z) ** exponents, axis=-1)
    return _scalar_or_array(result, z)


def zakharov(z):
    z = _as_batch(z)
    weights = 0.5 * np.arange(1, z.shape[-1] + 1, dtype=float)
    linear = np.sum(weights * z, axis=-1)
    result = np.sum(z**2, axis=-1) + linear**2 + linear**4
    return _scalar_or_array(result, z)


def rosenbrock(z):
    z = _as_batch(z)
    y = z * (2.048 / 100.0) + 1.0
    head, tail = y[..., :-1], y[..., 1:]
    result = np.sum(100.0 * (head**2 - tail) ** 2 + (head - 1.0) ** 2, axis=-1)
    return _scalar_or_array(result, z)


def _rastrigin_terms(y: np.ndarray) -> np.ndarray:
    return np.sum(y**2 - 10.0 * np.cos(2.0 * np.pi * y) + 10.0, axis=-1)


def rastrigin(z):
    z = _as_batch(z)
    return _scalar_or_array(_rastrigin_terms(z * (5.12 / 100.0)), z)


def expanded_schaffer_f6(z):
    """Schaffer F6 summed over consecutive pairs, wrapping (z_D, z_1)."""
    z = _as_batch(z)
    squared = z**2 + np.roll(z, -1, axis=-1) ** 2
    terms = 0.5 + (np.sin(np.sqrt(squared)) ** 2 - 0.5) / (1.0 + 0.001 * squared) ** 2
    return _scalar_or_array(np.sum(terms, axis=-1), z)


def lunacek_bi_rastrigin(z):
    """Lunacek bi-Rastrigin on the rotated vector.

    The CEC2017 code flips coordinates by the sign of the shift and rotates
    only the cosine term; here the whole vector is already rotated and no
    flip is applied. The optimum stays at z = 0.
    """
    z = _as_batch(z)
    dimension = z.shape[-1]
    mu0, d = 2.5, 1.0
    s = 1.0 - 1.0 / (2.0 * math.sqrt(dimension + 20.0) - 8.2)
    mu1 = -math.sqrt((mu0**2 - d) / s)
    y = z * (2.0 * 10.0 / 100.0)
    near = np.sum(y**2, axis=-1)
    far = d * dimension + s * np.sum((y + mu0 - mu1) ** 2, axis=-1)
    ripple = 10.0 * (dimension - np.sum(np.cos(2.0 * np.pi * y), axis=-1))
    return _scalar_or_array(np.minimum(near, far) + ripple, z)


def noncont_rastrigin(z):
    """Rastrigin with coordinates beyond 0.5 rounded to the nearest half."""
    z = _as_batch(z)
    stepped = np.where(np.abs(z) > 0.5, np.floor(2.0 * z + 0.5) / 2.0, z)
    return _scalar_or_array(_rastrigin_terms(stepped * (5.12 / 100.0)), z)


def levy(z):
    # w = 1 + z / 4 puts the optimum at z = 0
    z = _as_batch(z)
    w = 1.0 + z / 4.0
    head = np.sin(np.pi * w[..., 0]) ** 2
    body = np.sum(
        (w[..., :-1] - 1.0) ** 2
        * (1.0 + 10.0 * np.sin(np.pi * w[..., :-1] + 1.0) ** 2),
        axis=-1,
    )
    tail = (w[..., -1] - 1.0) ** 2 * (1.0 + np.sin(2.0 * np.pi * w[..., -1]) ** 2)
    return _scalar_or_array(head + body + tail, z)


def _schwefel_h(v: np.ndarray) -> np.ndarray:
    """Per-coordinate Schwefel term, with the CEC2017 folding outside [-500, 500]."""
    dimension = v.shape[-1]
    inside = v * np.sin(np.sqrt(np.abs(v)))
    upper_fold = 500.0 - np.fmod(v, 500.0)
    upper = upper_fold * np.sin(np.sqrt(np.abs(upper_fold))) - (
        (v - 500.0) / 100.0
    ) ** 2 / dimension
    lower_fold = np.fmod(np.abs(v), 500.0) - 500.0
    lower = lower_fold * np.sin(np.sqrt(np.abs(500.0 - np.fmod(np.abs(v), 500.0)))) - (
        (v + 500.0) / 100.0
    ) ** 2 / dimension
    return np.where(v > 500.0, upper, np.where(v < -500.0, lower, inside))


def schwefel(z):
    """Modified Schwefel, anchored so the value at z = 0 is exactly 0."""
    z = _as_batch(z)
    v = z * (1000.0 / 100.0) + _SCHWEFEL_OFFSET
    peak = _schwefel_h(np.full(z.shape[-1], _SCHWEFEL_OFFSET))
    result = np.sum(peak - _schwefel_h(v), axis=-1)
    return _scalar_or_array(result, z)


BASE_FUNCTIONS = {
    "bent_cigar": bent_cigar,
    "sum_diff_pow": sum_diff_pow,
    "zakharov": zakharov,
    "rosenbrock": rosenbrock,
    "rastrigin": rastrigin,
    "expanded_schaffer_f6": expanded_schaffer_f6,
    "lunacek_bi_rastrigin": lunacek_bi_rastrigin,
    "noncont_rastrigin": noncont_rastrigin,
    "levy": levy,
    "schwefel": schwefel,
}


@dataclass(frozen=True)
class CatalogEntry:
    number: int
    title: str
    base: str
    category: str
    nonnegative: bool

    @property
    def bias(self) -> float:
        return 100.0 * self.number

    @property
    def label(self) -> str:
        return f"F{self.number}"


CATALOG = {
    entry.number: entry
    for entry in (
        CatalogEntry(
            1, "Shifted and Rotated Bent Cigar", "bent_cigar", "unimodal", True
        ),
        CatalogEntry(
            2,
            "Shifted and Rotated Sum of Different Power",
            "sum_diff_pow",
            "unimodal",
            True,
        ),
        CatalogEntry(3, "Shifted and Rotated Zakharov", "zakharov", "unimodal", True),
        CatalogEntry(
            4, "Shifted and Rotated Rosenbrock", "rosenbrock", "multimodal", True
        ),
        CatalogEntry(
            5, "Shifted and Rotated Rastrigin", "rastrigin", "multimodal", True
        ),
        CatalogEntry(
            6,
            "Shifted and Rotated Expanded Schaffer F6",
            "expanded_schaffer_f6",
            "multimodal",
            True,
        ),
        CatalogEntry(
            7,
            "Shifted and Rotated Lunacek Bi-Rastrigin",
            "lunacek_bi_rastrigin",
            "multimodal",
            True,
        ),
        CatalogEntry(
            8,
            "Shifted and Rotated Non-Continuous Rastrigin",
            "noncont_rastrigin",
            "multimodal",
            True,
        ),
        CatalogEntry(9, "Shifted and Rotated Levy", "levy", "multimodal", True),
        CatalogEntry(
            10, "Shifted and Rotated Schwefel", "schwefel", "multimodal", False
        ),
    )
}


def catalog_entry(number: int) -> CatalogEntry:
    try:
        return CATALOG[int(number)]
    except (KeyError, ValueError):
        raise ConfigurationError(
            f"unknown function F{number}; built-ins are F1-F{max(CATALOG)}"
        ) from None


def orthogonality_error(rotation: np.ndarray) -> float:
    """Largest entry of ``|R R^T - I|``."""
    rotation = np.asarray(rotation, dtype=float)
    return float(np.max(np.abs(rotation @ rotation.T - np.eye(rotation.shape[0]))))


@dataclass(frozen=True, eq=False)
class BenchmarkFunction:
    """``f(x) = base(R (x - o)) + bias``, callable on one point or a batch."""

    base: Callable
    shift: np.ndarray
    rotation: np.ndarray
    bias: float = 0.0
    name: str = ""

    def __post_init__(self):
        shift = np.asarray(self.shift, dtype=float).reshape(-1)
        rotation = np.asarray(self.rotation, dtype=float)
        dimension = shift.size
        if rotation.shape != (dimension, dimension):
            raise ConfigurationError(
                f"rotation shape {rotation.shape} does not match "
                f"shift length {dimension}"
            )
        if orthogonality_error(rotation) > ORTHOGONALITY_TOLERANCE:
            raise ConfigurationError("rotation matrix is not orthogonal")
        object.__setattr__(self, "shift", shift)
        object.__setattr__(self, "rotation", rotation)
        object.__setattr__(self, "bias", float(self.bias))
        if not self.name:
            object.__setattr__(self, "name", getattr(self.base, "__name__", "composed"))

    @property
    def dimension(self) -> int:
        return int(self.shift.size)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dimension:
            raise ConfigurationError(
                f"{self.name} expects dimension {self.dimension}, got {x.shape[-1]}"
            )
        z = (x - self.shift) @ self.rotation.T
        return self.base(z) + self.bias


def compose(
    base, shift, rotation, bias: float = 0.0, name: str = ""
) -> BenchmarkFunction:
    """Shift, rotate and bias a base function; ``base`` may be a name or a callable."""
    if isinstance(base, str):
        try:
            base = BASE_FUNCTIONS[base]
        except KeyError:
            raise ConfigurationError(f"unknown base function {base!r}") from None
    return BenchmarkFunction(
        base=base, shift=shift, rotation=rotation, bias=bias, name=name
    )


@dataclass(frozen=True, eq=False)
class TransformSet:
    """Shift vectors and rotation matrices per function number for one D."""

    dimension: int
    shifts: dict = field(default_factory=dict)
    rotations: dict = field(default_factory=dict)
    provenance: str = ""

    def __post_init__(self):
        if set(self.shifts) != set(self.rotations):
            raise ConfigurationError("every shift needs a matching rotation")
        for number in self.shifts:
            shift = self.shifts[number]
            rotation = self.rotations[number]
            if shift.shape != (self.dimension,):
                raise ConfigurationError(
                    f"F{number} shift has shape {shift.shape}, "
                    f"expected ({self.dimension},)"
                )
            if rotation.shape != (self.dimension, self.dimension):
                raise ConfigurationError(
                    f"F{number} rotation has shape {rotation.shape}, "
                    f"expected ({self.dimension}, {self.dimension})"
                )
            if orthogonality_error(rotation) > ORTHOGONALITY_TOLERANCE:
                raise ConfigurationError(f"F{number} rotation is not orthogonal")

    @property
    def functions(self) -> list:
        return sorted(self.shifts)

    def function(self, number: int) -> BenchmarkFunction:
        entry = catalog_entry(number)
        if number not in self.shifts:
            raise ConfigurationError(
                f"{entry.label} has no transform for D={self.dimension} "
                f"in {self.provenance}"
            )
        return compose(
            entry.base,
            self.shifts[number],
            self.rotations[number],
            bias=entry.bias,
            name=f"{entry.label}_D{self.dimension}",
        )


def random_rotation(dimension: int, rng: RngStream) -> np.ndarray:
    """Haar-distributed orthogonal matrix from the QR factors of a Gaussian matrix."""
    q, r = np.linalg.qr(rng.normal((dimension, dimension)))
    return q * np.where(np.diag(r) < 0.0, -1.0, 1.0)


def synth_transforms(dimension: int, seed: int, functions=None) -> TransformSet:
    """Seeded stand-in for the official data: interior shifts, random rotations.

    Every function number gets its own stream keyed by (seed, D, number), so
    the transform of one function does not depend on which others are built.
    """
    if dimension < 2:
        raise ConfigurationError(f"transforms need dimension >= 2, got {dimension}")
    numbers = sorted(CATALOG) if functions is None else sorted(functions)
    shifts, rotations = {}, {}
    for number in numbers:
        catalog_entry(number)
        rng = RngStream.for_key(seed, dimension, number)
        shifts[number] = -SHIFT_RANGE + 2.0 * SHIFT_RANGE * rng.uniform(dimension)
        rotations[number] = random_rotation(dimension, rng)
    logger.debug("synthesized transforms for D=%d, seed=%d", dimension, seed)
    return TransformSet(
        dimension=dimension,
        shifts=shifts,
        rotations=rotations,
        provenance=f"synthetic:{seed}",
    )


def transform_filename(number: int, dimension: int) -> str:
    return f"F{number}_D{dimension}.txt"


def _read_numbers(path: Path) -> np.ndarray:
    try:
        text = path.read_text()
    except OSError as e:
        raise TransformLoadError(f"cannot read transform file {path}: {e}") from e
    try:
        numbers = np.array(text.split(), dtype=float)
    except ValueError as e:
        raise TransformLoadError(f"{path}: not a list of real numbers ({e})") from e
    if not np.all(np.isfinite(numbers)):
        raise TransformLoadError(f"{path}: contains non-finite values")
    return numbers


def load_transforms(path, dimension: int, number: int = 0) -> TransformSet:
    """Read one shift (D values) and one row-major rotation (D*D values).

    ``number`` keys the entry in the returned set; 0 means "unassigned".
    """
    path = Path(path)
    numbers = _read_numbers(path)
    expected = dimension + dimension * dimension
    if numbers.size != expected:
        raise TransformLoadError(
            f"{path}: expected {expected} values for D={dimension} "
            f"(shift + rotation), found {numbers.size}"
        )
    shift = numbers[:dimension]
    rotation = numbers[dimension:].reshape(dimension, dimension)
    error = orthogonality_error(rotation)
    if error > ORTHOGONALITY_TOLERANCE:
        raise TransformLoadError(
            f"{path}: rotation is not orthogonal (max |R R^T - I| = {error:.3e})"
        )
    return TransformSet(
        dimension=dimension,
        shifts={number: shift},
        rotations={number: rotation},
        provenance=str(path),
    )


def load_transform_directory(directory, dimension: int, functions) -> TransformSet:
    """Load ``F<n>_D<D>.txt`` for every requested function from ``directory``."""
    directory = Path(directory)
    if not directory.is_dir():
        raise TransformLoadError(f"transform directory {directory} does not exist")
    shifts, rotations = {}, {}
    for number in sorted(functions):
        single = load_transforms(
            directory / transform_filename(number, dimension), dimension, number
        )
        shifts[number] = single.shifts[number]
        rotations[number] = single.rotations[number]
    return TransformSet(
        dimension=dimension,
        shifts=shifts,
        rotations=rotations,
        provenance=str(directory),
    )


def save_transforms(transforms: TransformSet, directory) -> list:
    """Write each entry as shift (one line) then the rotation, one row per line."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for number in transforms.functions:
        path = directory / transform_filename(number, transforms.dimension)
        rows = [transforms.shifts[number]] + list(transforms.rotations[number])
        path.write_text(
            "\n".join(" ".join(f"{value:.17g}" for value in row) for row in rows) + "\n"
        )
        written.append(path)
    return written
