import gzip
import struct

import numpy as np
import pytest
from scipy.integrate import quad

from lpmc import (
    BadMagicError, CountMismatchError, DimensionMismatchError, GradSource, LabeledDataset,
    TruncatedFileError, gaussian_target, load_mnist_idx, logistic_target, mixture_target,
    stochastic_grad,
)
from lpmc.idx import IMAGES_MAGIC, LABELS_MAGIC, read_idx, write_idx
from oracles import fd_check


def small_dataset(rng, n=40, width=5, classes=3):
    x = rng.normal(size=(n, width))
    y = rng.integers(0, classes, n)
    return LabeledDataset(x, y, classes)


def test_gaussian_fd(rng):
    t = gaussian_target(4)
    _, ok = fd_check(t.energy, t.grad, rng.normal(0, 2, (100, 4)))
    assert ok


def test_mixture_fd(rng):
    t = mixture_target()
    _, ok = fd_check(t.energy, t.grad, rng.uniform(-4, 4, (100, 1)))
    assert ok


def test_logistic_fd(rng):
    t = logistic_target(small_dataset(rng), prior_variance=0.5)
    _, ok = fd_check(t.energy, t.grad, rng.normal(0, 0.3, (100, t.dim)))
    assert ok


def test_mixture_energy_is_log_density():
    t = mixture_target()
    for x in (-3.0, -1.0, 0.0, 0.4, 2.2):
        assert np.isclose(np.exp(-t.energy(x)) / np.sqrt(2 * np.pi), t.pdf(x), rtol=1e-13)
    assert np.isfinite(t.energy(500.0))  # no overflow far in the tail


def test_mixture_pdf_cdf_quantile():
    t = mixture_target()
    assert np.isclose(quad(t.pdf, -np.inf, np.inf)[0], 1.0, atol=1e-10)
    for x in (-2.0, -0.7, 0.0, 1.3):
        assert np.isclose(t.cdf(x), quad(t.pdf, -np.inf, x)[0], atol=1e-10)
    p = np.linspace(1e-4, 1 - 1e-4, 301)
    q = t.quantile(p)
    assert np.max(np.abs(t.cdf(q) - p)) < 1e-9
    assert np.all(np.diff(q) > 0)
    assert abs(t.quantile(0.5)) < 1e-9


def test_mixture_variance():
    t = mixture_target()
    assert np.isclose(quad(lambda x: x * x * t.pdf(x), -np.inf, np.inf)[0], 1.25)


def test_gaussian_quantile_roundtrip():
    t = gaussian_target(1)
    p = np.array([0.01, 0.3, 0.5, 0.9])
    assert np.allclose(t.cdf(t.quantile(p)), p)


def test_dataset_validation(rng):
    with pytest.raises(DimensionMismatchError):
        LabeledDataset(np.zeros((3, 2)), np.zeros(4, dtype=int))
    with pytest.raises(ValueError):
        LabeledDataset(np.zeros((3, 2)), np.array([0, 1, 5]), 3)


def test_logistic_minibatch_is_unbiased(rng):
    ds = small_dataset(rng, n=30)
    t = logistic_target(ds, 0.5)
    src = GradSource(t, batch_size=5)
    w = rng.normal(0, 0.2, t.dim)
    est = np.mean([stochastic_grad(src, w, rng) for _ in range(20_000)], axis=0)
    assert np.allclose(est, t.grad(w), atol=0.1 * np.abs(t.grad(w)).max())


def test_grad_noise_only_when_enabled():
    t = gaussian_target(3)
    a, b = np.random.default_rng(1), np.random.default_rng(1)
    assert np.array_equal(stochastic_grad(GradSource(t), np.ones(3), a), np.ones(3))
    assert a.random() == b.random()
    g = stochastic_grad(GradSource(t, noise_sigma=0.5), np.ones(3), a)
    assert not np.array_equal(g, np.ones(3))


def test_minibatch_needs_dataset():
    with pytest.raises(ValueError):
        GradSource(gaussian_target(1), batch_size=4)


def _mnist_fixture(tmp_path, n=3, rows=4, cols=5, labels=None, compress=False):
    img = (np.arange(n * rows * cols) * 7 % 256).astype(np.uint8).reshape(n, rows, cols)
    lab = np.array(labels if labels is not None else [3, 0, 9][:n], dtype=np.uint8)
    suffix = ".gz" if compress else ""
    ip, lp = tmp_path / f"img{suffix}", tmp_path / f"lab{suffix}"
    write_idx(ip, img)
    write_idx(lp, lab)
    return img, lab, ip, lp


@pytest.mark.parametrize("compress", [False, True])
def test_idx_roundtrip(tmp_path, compress):
    img, lab, ip, lp = _mnist_fixture(tmp_path, compress=compress)
    assert np.array_equal(read_idx(ip, IMAGES_MAGIC), img)
    assert np.array_equal(read_idx(lp, LABELS_MAGIC), lab)
    ds = load_mnist_idx(ip, lp)
    assert ds.features.shape == (3, 4 * 5 + 1)
    assert np.allclose(ds.features[:, :-1], img.reshape(3, -1) / 255.0)
    assert np.all(ds.features[:, -1] == 1.0)
    assert ds.labels.tolist() == [3, 0, 9]


def test_idx_header_is_big_endian(tmp_path):
    _, _, ip, _ = _mnist_fixture(tmp_path)
    raw = ip.read_bytes()
    assert struct.unpack(">IIII", raw[:16]) == (0x803, 3, 4, 5)


def test_idx_errors(tmp_path):
    _, _, ip, lp = _mnist_fixture(tmp_path)
    with pytest.raises(BadMagicError):
        read_idx(lp, IMAGES_MAGIC)
    bad = tmp_path / "short"
    bad.write_bytes(ip.read_bytes()[:-7])
    with pytest.raises(TruncatedFileError):
        read_idx(bad, IMAGES_MAGIC)
    other = tmp_path / "other"
    other.mkdir()
    _, _, _, lp2 = _mnist_fixture(other, n=2, labels=[1, 2])
    with pytest.raises(CountMismatchError):
        load_mnist_idx(ip, lp2)
    gz = tmp_path / "x.gz"
    with gzip.open(gz, "wb") as f:
        f.write(b"\x00\x00")
    with pytest.raises(TruncatedFileError):
        read_idx(gz, IMAGES_MAGIC)
