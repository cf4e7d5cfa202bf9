import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cdms.exceptions import ConfigError
from cdms.metrics import EvalReport
from cdms.synthetic import (
    BenchmarkReport,
    SynthSpec,
    generate_transfer_instance,
    load_synth_spec,
    run_benchmark,
)
from cdms.tensor_io import SolverConfig


def runs(labels):
    """(value, length) of each maximal constant run."""
    out = []
    for v in labels:
        if out and out[-1][0] == v:
            out[-1][1] += 1
        else:
            out.append([v, 1])
    return [tuple(r) for r in out]


def test_noise_free_target_lies_in_source_subspace():
    spec = SynthSpec(noise_sigma=0.0, domain_shift=0.0)
    X_s, y_s, X_t, y_t = generate_transfer_instance(spec)
    for c in range(spec.k):
        basis = X_s[:, y_s == c]
        assert np.linalg.matrix_rank(basis) == spec.subspace_dim
        T = X_t[:, y_t == c]
        coef, *_ = np.linalg.lstsq(basis, T, rcond=None)
        resid = np.abs(basis @ coef - T).max()
        assert resid < 1e-8 * max(1.0, np.abs(T).max())


def test_deterministic():
    a = generate_transfer_instance(SynthSpec(seed=3))
    b = generate_transfer_instance(SynthSpec(seed=3))
    for u, v in zip(a, b):
        np.testing.assert_array_equal(u, v)
    c = generate_transfer_instance(SynthSpec(seed=4))
    assert not np.array_equal(a[0], c[0])


def test_segment_structure():
    spec = SynthSpec(k=3, d=60, subspace_dim=5, seg_len_range=(30, 60))
    X_s, y_s, X_t, y_t = generate_transfer_instance(spec)
    src_runs, tgt_runs = runs(y_s), runs(y_t)
    assert len(src_runs) == spec.n_segments_source
    assert len(tgt_runs) == spec.n_segments_target
    for _, n in src_runs + tgt_runs:
        assert 30 <= n <= 60
    assert [v for v, _ in src_runs] == [i % 3 for i in range(spec.n_segments_source)]
    tgt_order = [v for v, _ in tgt_runs][:3]
    assert sorted(tgt_order) == [0, 1, 2] and tgt_order != [0, 1, 2]
    assert X_s.shape == (60, y_s.size) and X_t.shape == (60, y_t.size)


def test_default_sizes():
    X_s, y_s, X_t, y_t = generate_transfer_instance(SynthSpec())
    assert 120 <= y_s.size <= 180 and 120 <= y_t.size <= 180


@settings(max_examples=30, deadline=None)
@given(
    k=st.integers(2, 4),
    r=st.integers(1, 3),
    lo=st.integers(3, 6),
    extra=st.integers(0, 4),
    shift=st.floats(0, 1),
    sigma=st.floats(0, 1),
    seed=st.integers(0, 2**32 - 1),
)
def test_generated_data_nonnegative_finite(k, r, lo, extra, shift, sigma, seed):
    spec = SynthSpec(
        k=k, d=7, subspace_dim=r, n_segments_source=k, n_segments_target=k,
        seg_len_range=(max(lo, r), max(lo, r) + extra), domain_shift=shift,
        noise_sigma=sigma, seed=seed,
    )
    X_s, y_s, X_t, y_t = generate_transfer_instance(spec)
    for X in (X_s, X_t):
        assert np.all(np.isfinite(X)) and X.min() >= 0
    assert set(y_s) == set(range(k)) == set(y_t)


@pytest.mark.parametrize(
    "kwargs, match",
    [
        ({"k": 1}, "k must"),
        ({"subspace_dim": 0}, "subspace_dim"),
        ({"seg_len_range": (3, 10), "subspace_dim": 4}, "below subspace_dim"),
        ({"seg_len_range": (10, 5)}, "seg_len_range"),
        ({"noise_sigma": -1.0}, "noise_sigma"),
        ({"domain_shift": float("inf")}, "domain_shift"),
        ({"n_segments_target": 0}, "segment counts"),
    ],
)
def test_spec_validation(kwargs, match):
    with pytest.raises(ConfigError, match=match):
        SynthSpec(**kwargs)


def test_load_synth_spec(tmp_path):
    path = tmp_path / "spec.txt"
    path.write_text("# easy\nk = 4\nseg_len_range = 25,35\nnoise_sigma = 0.5\n")
    spec = load_synth_spec(path)
    assert spec == SynthSpec(k=4, seg_len_range=(25, 35), noise_sigma=0.5)
    path.write_text("colour = red\n")
    with pytest.raises(ConfigError, match="colour"):
        load_synth_spec(path)
    path.write_text("k = three\n")
    with pytest.raises(ConfigError, match="'k'"):
        load_synth_spec(path)


def test_report_csv_row():
    report = BenchmarkReport(
        eval=EvalReport(0.5, 0.75, None, None),
        converged=True,
        iters=12,
        wall_time=1.25,
        layer_nmi=[0.25, 0.125],
        diversity=0.0,
    )
    assert report.csv_row() == "0.5,0.75,true,12,1.250000,0.25,0.125"


def test_run_benchmark_small():
    spec = SynthSpec(k=2, d=12, subspace_dim=2, n_segments_source=2, n_segments_target=2,
                     seg_len_range=(8, 10), seed=1)
    cfg = SolverConfig(layer_dims=(6, 4), tau=3, max_iters=20, pretrain_iters=30)
    a = run_benchmark(spec, cfg)
    b = run_benchmark(spec, cfg)
    assert len(a.layer_nmi) == 2
    assert 0 <= a.eval.nmi <= 1 and 0 <= a.eval.acc <= 1
    assert a.iters == 20 and a.diversity >= 0
    assert (a.eval.nmi, a.eval.acc, a.layer_nmi, a.iters) == (
        b.eval.nmi, b.eval.acc, b.layer_nmi, b.iters,
    )
