"""Plain-text I/O for feature matrices, label sequences and solver configs.

Matrices are header-less CSV written with 17 significant digits so that
every float64 survives a save/load cycle unchanged.
"""

import csv
import dataclasses
import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from cdms.exceptions import ConfigError, LoadError

Orientation = Literal["rows-are-features", "rows-are-frames"]


def load_matrix(path, nonnegative=False):
    """Read a rectangular numeric CSV grid as a float64 array.

    Errors name the offending cell with 1-based row and column indices.
    """
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        for i, row in enumerate(csv.reader(fh), start=1):
            if not row:
                continue
            values = []
            for j, cell in enumerate(row, start=1):
                try:
                    v = float(cell)
                except ValueError:
                    raise LoadError(
                        f"{path}: non-numeric value {cell!r} at row {i}, column {j}"
                    ) from None
                if not math.isfinite(v):
                    raise LoadError(f"{path}: non-finite value at row {i}, column {j}")
                if nonnegative and v < 0:
                    raise LoadError(f"{path}: negative value at row {i}, column {j}")
                values.append(v)
            if rows and len(values) != len(rows[0]):
                raise LoadError(
                    f"{path}: row {i} has {len(values)} columns, expected {len(rows[0])}"
                )
            rows.append(values)
    if not rows:
        raise LoadError(f"{path}: empty matrix file")
    return np.array(rows, dtype=np.float64)


def load_feature_matrix(path, orientation: Orientation = "rows-are-features"):
    """Load a nonnegative d x n feature matrix (one column per frame)."""
    if orientation not in ("rows-are-features", "rows-are-frames"):
        raise ValueError(f"unknown orientation {orientation!r}")
    X = load_matrix(path, nonnegative=True)
    if orientation == "rows-are-frames":
        X = np.ascontiguousarray(X.T)
    return X


def save_matrix(path, M):
    M = np.atleast_2d(np.asarray(M, dtype=np.float64))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for row in M:
            fh.write(",".join(format(v, ".17g") for v in row))
            fh.write("\n")


def remap_labels(labels):
    """Relabel to 0..k-1 in order of first occurrence."""
    labels = np.asarray(labels)
    _, first, inverse = np.unique(labels, return_index=True, return_inverse=True)
    order = np.argsort(np.argsort(first, kind="stable"), kind="stable")
    return order[inverse].astype(np.int64)


def load_labels(path):
    """Read one integer label per line, remapped to 0..k-1."""
    values = []
    with open(path, encoding="utf-8") as fh:
        for i, line in enumerate(fh, start=1):
            s = line.strip()
            if not s:
                continue
            try:
                values.append(int(s, 10))
            except ValueError:
                raise LoadError(f"{path}: non-integer label {s!r} at line {i}") from None
    if not values:
        raise LoadError(f"{path}: empty label file")
    return remap_labels(values)


def save_labels(path, labels):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for v in np.asarray(labels, dtype=np.int64):
            fh.write(f"{int(v)}\n")


def read_key_values(path):
    """Parse ``key = value`` lines; ``#`` starts a comment.

    Returns a dict of raw string values in file order.
    """
    out = {}
    with open(path, encoding="utf-8") as fh:
        for i, line in enumerate(fh, start=1):
            s = line.split("#", 1)[0].strip()
            if not s:
                continue
            key, sep, value = s.partition("=")
            key, value = key.strip(), value.strip()
            if not sep or not key:
                raise ConfigError(f"{path}: line {i}: expected 'key = value'")
            if key in out:
                raise ConfigError(f"{path}: line {i}: duplicate key {key!r}")
            out[key] = value
    return out


def parse_int_list(text):
    return [int(p.strip(), 10) for p in text.split(",") if p.strip()]


@dataclass(frozen=True)
class SolverConfig:
    alpha: float = 0.1
    beta: float = 10.0
    gamma: float = 10.0
    layer_dims: tuple = (128, 64, 16)
    tau: int = 15
    rho: float = 1.5
    eps: float = 1e-4
    mu0: float = 1e-4
    mu_max: float = 1e6
    max_iters: int = 300
    pretrain_iters: int = 200
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "layer_dims", tuple(int(v) for v in self.layer_dims))
        for name in ("alpha", "beta", "gamma"):
            v = getattr(self, name)
            if not (v >= 0 and math.isfinite(v)):
                raise ConfigError(f"{name} must be a finite nonnegative number, got {v}")
        dims = self.layer_dims
        if not dims:
            raise ConfigError("layer_dims must list at least one layer")
        if any(b >= a for a, b in zip(dims, dims[1:])):
            raise ConfigError(f"layer_dims must be strictly decreasing, got {list(dims)}")
        if dims[-1] < 2:
            raise ConfigError("layer_dims: last layer must have at least 2 dimensions")
        if self.tau < 1:
            raise ConfigError(f"tau must be a positive integer, got {self.tau}")
        if not self.rho > 1:
            raise ConfigError(f"rho must be > 1, got {self.rho}")
        if not self.eps > 0:
            raise ConfigError(f"eps must be positive, got {self.eps}")
        if not (self.mu0 > 0 and self.mu_max > 0):
            raise ConfigError("mu0 and mu_max must be positive")
        if self.mu0 > self.mu_max:
            raise ConfigError(f"mu0 ({self.mu0}) exceeds mu_max ({self.mu_max})")
        if self.max_iters < 1:
            raise ConfigError(f"max_iters must be a positive integer, got {self.max_iters}")
        if self.pretrain_iters < 1:
            raise ConfigError(
                f"pretrain_iters must be a positive integer, got {self.pretrain_iters}"
            )
        if self.seed < 0:
            raise ConfigError(f"seed must be unsigned, got {self.seed}")

    @property
    def n_layers(self):
        return len(self.layer_dims)

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


_FLOAT_KEYS = ("alpha", "beta", "gamma", "rho", "eps", "mu0", "mu_max")
_INT_KEYS = ("tau", "max_iters", "pretrain_iters", "seed")


def parse_config_values(raw, base=None):
    """Build a SolverConfig from raw string values layered over ``base``."""
    changes = {}
    for key, text in raw.items():
        try:
            if key in _FLOAT_KEYS:
                changes[key] = float(text)
            elif key in _INT_KEYS:
                changes[key] = int(text, 10)
            elif key == "layer_dims":
                changes[key] = tuple(parse_int_list(text))
            else:
                raise ConfigError(f"unknown config key {key!r}")
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"cannot parse value {text!r} for key {key!r}") from None
    base = base if base is not None else SolverConfig()
    return base.replace(**changes)


def load_config(path):
    return parse_config_values(read_key_values(path))


def save_config(path, config: SolverConfig):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for field in dataclasses.fields(config):
            v = getattr(config, field.name)
            if field.name == "layer_dims":
                text = ",".join(str(x) for x in v)
            elif isinstance(v, float):
                text = format(v, ".17g")
            else:
                text = str(v)
            fh.write(f"{field.name} = {text}\n")
