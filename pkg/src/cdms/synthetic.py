"""Synthetic source/target sequences drawn from a union of nonnegative subspaces.

Each cluster ``c`` owns a basis ``B_c``; a segment of frames from cluster
``c`` is ``B_c w + |noise|`` with ``w ~ |N(0, 1)|``. The target domain reuses
the bases after an entrywise nonnegative perturbation.
"""

import dataclasses
import time
from dataclasses import dataclass

import numpy as np

from cdms.admm import make_problem, solve
from cdms.clustering import fuse_affinity, normalized_cuts
from cdms.exceptions import ConfigError
from cdms.hsic import mean_pairwise_diversity
from cdms.metrics import evaluate, nmi
from cdms.tensor_io import parse_int_list, read_key_values


@dataclass(frozen=True)
class SynthSpec:
    k: int = 3
    d: int = 60
    subspace_dim: int = 4
    n_segments_source: int = 6
    n_segments_target: int = 6
    seg_len_range: tuple = (20, 30)
    domain_shift: float = 0.05
    noise_sigma: float = 0.01
    seed: int = 7

    def __post_init__(self):
        object.__setattr__(self, "seg_len_range", tuple(int(v) for v in self.seg_len_range))
        lo_hi = self.seg_len_range
        if self.k < 2:
            raise ConfigError(f"k must be >= 2, got {self.k}")
        if self.d < 1:
            raise ConfigError(f"d must be positive, got {self.d}")
        if self.subspace_dim < 1:
            raise ConfigError(f"subspace_dim must be >= 1, got {self.subspace_dim}")
        if self.n_segments_source < 1 or self.n_segments_target < 1:
            raise ConfigError("segment counts must be positive")
        if len(lo_hi) != 2 or lo_hi[0] > lo_hi[1]:
            raise ConfigError(f"seg_len_range must be 'min,max', got {list(lo_hi)}")
        if lo_hi[0] < self.subspace_dim:
            raise ConfigError(
                f"seg_len_range min ({lo_hi[0]}) is below subspace_dim ({self.subspace_dim})"
            )
        for name in ("domain_shift", "noise_sigma"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v >= 0):
                raise ConfigError(f"{name} must be finite and nonnegative, got {v}")
        if self.seed < 0:
            raise ConfigError(f"seed must be unsigned, got {self.seed}")


def load_synth_spec(path):
    raw = read_key_values(path)
    fields = {f.name: f for f in dataclasses.fields(SynthSpec)}
    changes = {}
    for key, text in raw.items():
        if key not in fields:
            raise ConfigError(f"unknown spec key {key!r}")
        try:
            if key == "seg_len_range":
                changes[key] = tuple(parse_int_list(text))
            elif key in ("domain_shift", "noise_sigma"):
                changes[key] = float(text)
            else:
                changes[key] = int(text, 10)
        except ValueError:
            raise ConfigError(f"cannot parse value {text!r} for key {key!r}") from None
    return SynthSpec(**changes)


def _segments(rng, n_segments, order, lo, hi):
    labels = []
    for i in range(n_segments):
        length = int(rng.integers(lo, hi + 1))
        labels.extend([order[i % len(order)]] * length)
    return np.asarray(labels, dtype=np.int64)


def _frames(rng, bases, labels, sigma):
    d, r = bases[0].shape
    X = np.empty((d, labels.size))
    W = np.abs(rng.standard_normal((r, labels.size)))
    for c, B in enumerate(bases):
        cols = labels == c
        X[:, cols] = B @ W[:, cols]
    if sigma > 0:
        X += np.abs(sigma * rng.standard_normal(X.shape))
    return np.maximum(X, 0.0)


def generate_transfer_instance(spec: SynthSpec):
    """Return ``(X_s, labels_s, X_t, labels_t)``; matrices are d x n."""
    rng = np.random.default_rng(spec.seed)
    lo, hi = spec.seg_len_range
    bases = [np.abs(rng.standard_normal((spec.d, spec.subspace_dim))) for _ in range(spec.k)]
    src_labels = _segments(rng, spec.n_segments_source, list(range(spec.k)), lo, hi)
    X_s = _frames(rng, bases, src_labels, spec.noise_sigma)

    order = np.arange(spec.k)
    while np.array_equal(order, np.arange(spec.k)):
        order = rng.permutation(spec.k)
    shifted = [B + spec.domain_shift * np.abs(rng.standard_normal(B.shape)) for B in bases]
    tgt_labels = _segments(rng, spec.n_segments_target, list(order), lo, hi)
    X_t = _frames(rng, shifted, tgt_labels, spec.noise_sigma)
    return X_s, src_labels, X_t, tgt_labels


@dataclass
class BenchmarkReport:
    eval: object
    converged: bool
    iters: int
    wall_time: float
    layer_nmi: list
    diversity: float

    def csv_row(self):
        parts = [
            format(self.eval.nmi, ".17g"),
            format(self.eval.acc, ".17g"),
            str(self.converged).lower(),
            str(self.iters),
            format(self.wall_time, ".6f"),
        ]
        parts += [format(v, ".17g") for v in self.layer_nmi]
        return ",".join(parts)


def segment_target(output, n_s, k, seed):
    """Fused-affinity labels plus per-layer labels for the fusion ablation."""
    A = fuse_affinity(output.Z, n_s)
    fused = normalized_cuts(A, k, seed)
    per_layer = [normalized_cuts(fuse_affinity([Z], n_s), k, seed) for Z in output.Z]
    return A, fused, per_layer


def run_benchmark(spec: SynthSpec, config, k=None):
    """Generate an instance, solve, cluster the target and score it."""
    k = spec.k if k is None else k
    t0 = time.perf_counter()
    X_s, y_s, X_t, y_t = generate_transfer_instance(spec)
    problem = make_problem(X_s, X_t, y_s, config)
    out = solve(problem)
    _, fused, per_layer = segment_target(out, problem.n_s, k, config.seed)
    wall = time.perf_counter() - t0
    return BenchmarkReport(
        eval=evaluate(y_t, fused),
        converged=out.converged,
        iters=out.iters_run,
        wall_time=wall,
        layer_nmi=[nmi(y_t, p) for p in per_layer],
        diversity=mean_pairwise_diversity(out.Z),
    )
