"""Benchmark dataset generators and teacher functions.

Covers concentric-circle classification, polynomial and modulo regression,
two-input time-varying targets, and the LWE encryption/decryption tasks,
plus train/validation splitting and classification scoring.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import lwe
from .errors import ConfigurationError, InputDomainError

TASK_KINDS = (
    "circles",
    "polynomial",
    "modulo",
    "poly-mod",
    "pair-sum",
    "pair-product",
    "pair-modlin",
    "lwe-encrypt",
    "lwe-decrypt",
)

#: teacher values used for the two circle classes (class index + 1, keeping
#: targets away from zero so the error metric stays finite)
CLASS_TEACHERS = (1.0, 2.0)


@dataclass(frozen=True)
class TaskSpec:
    """Benchmark task selector with per-kind parameters."""

    kind: str
    x_range: tuple = (0.1, 3.0)
    modulo_base: float = 1.3
    poly_mod_base: float = 50.0
    pair_max: int = 40
    inner_radius: float = 1.0
    outer_radii: tuple = (1.5, 2.5)

    def __post_init__(self):
        if self.kind not in TASK_KINDS:
            raise ConfigurationError("task.kind", f"must be one of {TASK_KINDS}")
        if self.x_range[0] >= self.x_range[1]:
            raise ConfigurationError("task.x_range", "must be an increasing interval")
        if self.modulo_base <= 0.0 or self.poly_mod_base <= 0.0:
            raise ConfigurationError("task.modulo_base", "modulo bases must be positive")
        if not 0.0 < self.inner_radius < self.outer_radii[0] < self.outer_radii[1]:
            raise ConfigurationError("task.radii", "inner disk must sit inside the outer annulus")


def polynomial_teacher(x: float) -> float:
    """Degree-9 benchmark polynomial with roots at 0, 1, 2, 3, 4, -1, -2, -3, -10."""
    return x * (x - 4) * (x - 3) * (x - 2) * (x - 1) * (x + 1) * (x + 2) * (x + 3) * (x + 10)


def modulo_teacher(x: float, base: float) -> float:
    """Non-negative remainder of x modulo base."""
    if base <= 0.0:
        raise ConfigurationError("base", "must be positive")
    return x - base * math.floor(x / base)


def poly_mod_teacher(x: float, base: float = 50.0) -> float:
    """Benchmark polynomial folded into [0, base)."""
    return modulo_teacher(polynomial_teacher(x), base)


def pair_teachers(x1: float, x2: float, pair_max: int = 40) -> tuple:
    """(sum, product, mod(2*x2 - x1, 3)) for a two-value input."""
    if not (0 <= x1 <= pair_max and 0 <= x2 <= pair_max):
        raise InputDomainError(f"pair inputs must lie in [0, {pair_max}]")
    return (x1 + x2, x1 * x2, modulo_teacher(2.0 * x2 - x1, 3.0))


def concentric_circles(n_points: int, seed: int, inner_radius: float = 1.0,
                       outer_radii: tuple = (1.5, 2.5)) -> tuple:
    """Two-class ring dataset: class 1 inside the inner disk, class 0 on the
    outer annulus. Returns (points (n, 2), labels (n,))."""
    if n_points < 2:
        raise ConfigurationError("n_points", "need at least 2 points")
    rng = np.random.default_rng([seed, 0x63697263])
    labels = np.arange(n_points) % 2
    angles = rng.uniform(0.0, 2.0 * math.pi, n_points)
    radii = np.where(
        labels == 1,
        rng.uniform(0.0, inner_radius, n_points),
        rng.uniform(outer_radii[0], outer_radii[1], n_points),
    )
    points = np.column_stack([radii * np.cos(angles), radii * np.sin(angles)])
    return points, labels


def class_teacher(label: int) -> float:
    """Teacher value for a class label (label + 1)."""
    return CLASS_TEACHERS[int(label)]


def classify(estimate: float) -> int:
    """Nearest-teacher-value rule mapped back to the class label."""
    teachers = np.asarray(CLASS_TEACHERS)
    return int(np.argmin(np.abs(teachers - estimate)))


def decision_surface(x_values, y_values, model) -> np.ndarray:
    """Class grid over a regular mesh; ``model(x, y)`` returns the estimate."""
    x_values = np.asarray(x_values, dtype=float)
    y_values = np.asarray(y_values, dtype=float)
    grid = np.empty((y_values.size, x_values.size), dtype=int)
    for iy, y in enumerate(y_values):
        for ix, x in enumerate(x_values):
            grid[iy, ix] = classify(float(model(x, y)))
    return grid


@dataclass(frozen=True)
class Dataset:
    """Task inputs and teachers with a train/validation split.

    inputs hold raw (unnormalised) value sequences; value_max is the
    normalisation ceiling; multi_input marks per-coordinate kernel runs
    (classification) rather than one time-varying message.
    """

    kind: str
    inputs: list
    teachers: list
    value_max: float
    train_idx: np.ndarray
    val_idx: np.ndarray
    seed: int
    multi_input: bool = False
    labels: list | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.inputs) != len(self.teachers):
            raise ConfigurationError("dataset", "inputs and teachers must have equal counts")
        train = set(int(i) for i in self.train_idx)
        val = set(int(i) for i in self.val_idx)
        if len(self.inputs) == 1:
            # single-case interpolation mode: the same case trains and validates
            if train == val == {0}:
                return
        if train & val or train | val != set(range(len(self.inputs))):
            raise ConfigurationError("dataset.split", "split sets must be disjoint and covering")

    @property
    def n_cases(self) -> int:
        return len(self.inputs)


def split_indices(n: int, val_fraction: float, seed: int) -> tuple:
    """Uniform random disjoint partition into (train, val) index arrays.

    A single-case dataset trains and validates on that one case (the
    interpolation sanity check).
    """
    if not 0.0 < val_fraction < 1.0:
        raise ConfigurationError("val_fraction", "must lie strictly between 0 and 1")
    if n == 1:
        return np.array([0]), np.array([0])
    n_val = int(round(n * val_fraction))
    if n_val == 0 or n_val == n:
        raise ConfigurationError("val_fraction", f"degenerate split for {n} cases")
    rng = np.random.default_rng([seed, 0x73706C69])
    order = rng.permutation(n)
    return np.sort(order[n_val:]), np.sort(order[:n_val])


def split_dataset(dataset: Dataset, val_fraction: float, seed: int) -> Dataset:
    """Return a copy of the dataset with a fresh train/validation split."""
    train_idx, val_idx = split_indices(dataset.n_cases, val_fraction, seed)
    return Dataset(
        kind=dataset.kind, inputs=dataset.inputs, teachers=dataset.teachers,
        value_max=dataset.value_max, train_idx=train_idx, val_idx=val_idx,
        seed=seed, multi_input=dataset.multi_input, labels=dataset.labels,
        meta=dataset.meta,
    )


def build_dataset(
    spec: TaskSpec,
    n_cases: int,
    seed: int,
    val_fraction: float = 0.2,
    lwe_params: lwe.LweParams | None = None,
) -> Dataset:
    """Generate inputs and teachers for one task kind, reproducibly from the seed."""
    if n_cases < 1:
        raise ConfigurationError("n_cases", "need at least 1 case")
    kind = spec.kind
    labels = None
    multi_input = False
    meta: dict = {}

    if kind in ("polynomial", "modulo", "poly-mod"):
        xs = np.linspace(spec.x_range[0], spec.x_range[1], n_cases)
        inputs = [[float(x)] for x in xs]
        if kind == "polynomial":
            teachers = [[polynomial_teacher(x)] for x in xs]
        elif kind == "modulo":
            teachers = [[modulo_teacher(float(x), spec.modulo_base)] for x in xs]
        else:
            teachers = [[poly_mod_teacher(float(x), spec.poly_mod_base)] for x in xs]
        value_max = float(spec.x_range[1])
    elif kind in ("pair-sum", "pair-product", "pair-modlin"):
        rng = np.random.default_rng([seed, 0x70616972])
        side = spec.pair_max + 1
        total = side * side
        chosen = rng.choice(total, size=min(n_cases, total), replace=False)
        pairs = [(int(c // side), int(c % side)) for c in chosen]
        inputs = [[float(a), float(b)] for a, b in pairs]
        col = {"pair-sum": 0, "pair-product": 1, "pair-modlin": 2}[kind]
        teachers = [[pair_teachers(a, b, spec.pair_max)[col]] for a, b in pairs]
        value_max = float(spec.pair_max)
    elif kind == "circles":
        points, point_labels = concentric_circles(
            n_cases, seed, spec.inner_radius, spec.outer_radii
        )
        shift = spec.outer_radii[1]
        inputs = [[float(p[0] + shift), float(p[1] + shift)] for p in points]
        teachers = [[class_teacher(l)] for l in point_labels]
        labels = [int(l) for l in point_labels]
        value_max = 2.0 * shift
        multi_input = True
    elif kind in ("lwe-encrypt", "lwe-decrypt"):
        params = lwe_params or lwe.LweParams()
        rng = np.random.default_rng([seed, 0x6C7765])
        cases = lwe.generate_testcases(params, n_cases, rng)
        if kind == "lwe-encrypt":
            inputs = [list(c.a_samples) + list(c.b_samples) + [c.phi] for c in cases]
            teachers = [[float(c.u), float(c.v)] for c in cases]
        else:
            inputs = [[float(c.u), float(c.v)] for c in cases]
            teachers = [[float(c.decrypt_value)] for c in cases]
            labels = [c.phi for c in cases]
        value_max = float(params.q - 1)
        meta["lwe_q"] = params.q
    else:  # pragma: no cover - guarded by TaskSpec
        raise ConfigurationError("task.kind", f"unhandled kind {kind}")

    train_idx, val_idx = split_indices(len(inputs), val_fraction, seed)
    return Dataset(
        kind=kind, inputs=inputs, teachers=teachers, value_max=value_max,
        train_idx=train_idx, val_idx=val_idx, seed=seed,
        multi_input=multi_input, labels=labels, meta=meta,
    )


def confusion_matrix(true_labels, predicted_labels, n_classes: int = 2) -> np.ndarray:
    """Counts[i, j] of true class i predicted as class j."""
    counts = np.zeros((n_classes, n_classes), dtype=int)
    for t, p in zip(true_labels, predicted_labels):
        counts[int(t), int(p)] += 1
    return counts


def dataset_to_csv(dataset: Dataset, path, config_digest: str | None = None) -> None:
    """Write a task dataset with per-kind headers."""
    kind = dataset.kind
    with open(path, "w") as fh:
        if config_digest:
            fh.write(f"# config_digest={config_digest}\n")
        if kind in ("polynomial", "modulo", "poly-mod"):
            fh.write("x,y_teacher\n")
            for inp, t in zip(dataset.inputs, dataset.teachers):
                fh.write(f"{repr(inp[0])},{repr(float(t[0]))}\n")
        elif kind in ("pair-sum", "pair-product", "pair-modlin"):
            fh.write("x1,x2,sum,product,modlin\n")
            for inp in dataset.inputs:
                s, p, m = pair_teachers(inp[0], inp[1])
                fh.write(f"{repr(inp[0])},{repr(inp[1])},{repr(s)},{repr(p)},{repr(m)}\n")
        elif kind == "circles":
            fh.write("x,y,class\n")
            for inp, label in zip(dataset.inputs, dataset.labels):
                fh.write(f"{repr(inp[0])},{repr(inp[1])},{label}\n")
        else:
            raise ConfigurationError("task.kind", f"no CSV schema for {kind} (use the JSON dataset)")
