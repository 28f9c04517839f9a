import math

import numpy as np
import pytest

from lpmc import (
    KINDS, ChainState, FixedPointSpec, GradSource, HmcParams, LabeledDataset, NotPSDError,
    SamplerConfig, eta_for_var_ratio, gaussian_target, hmc_noise_cov, logistic_target,
    mixture_target, run_chain, sample_hmc_noise, step_sghmc,
)
from lpmc.quant import BfpSpec
from lpmc.samplers import NoiseCov
from oracles import hmc_linear_map, noise_cov_quad, sgld_ar1_variance, stationary_hmc_cov

S84 = FixedPointSpec(8, 4)
PRESET_PARAMS = [(2.0, 3.0, 0.09), (1.0, 3.0, 0.1), (2.0, 2.0, 0.01)]


def make_config(kind, iterations=2000, eta=0.09, gamma=3.0, u=2.0, **kw):
    hmc = HmcParams(eta, gamma, u) if kind.startswith("sghmc") else None
    spec = None if kind in ("sgld", "sghmc") else S84
    return SamplerConfig(kind, iterations, hmc=hmc, eta=eta, weight_spec=spec, **kw)


@pytest.mark.parametrize("u,gamma,eta", PRESET_PARAMS + [(1.0, 1.0, 1e-6), (0.5, 4.0, 2.5), (1.0, 1.0, 0.49)])
def test_noise_cov_matches_quadrature(u, gamma, eta):
    cov = hmc_noise_cov(HmcParams(eta, gamma, u))
    ref = noise_cov_quad(u, gamma, eta)
    for got, want in zip((cov.s_xx, cov.s_xv, cov.s_vv), ref):
        assert math.isclose(got, want, rel_tol=1e-11)


def test_sxx_series_is_continuous_at_switch():
    lo = hmc_noise_cov(HmcParams(0.5 - 1e-12, 1.0, 1.0)).s_xx
    hi = hmc_noise_cov(HmcParams(0.5 + 1e-12, 1.0, 1.0)).s_xx
    assert math.isclose(lo, hi, rel_tol=1e-9)


def test_noise_cov_psd_on_sweep():
    for h in np.logspace(-6, 1, 60):
        cov = hmc_noise_cov(HmcParams(h / 3.0, 3.0, 2.0))
        assert cov.s_xx > 0 and cov.s_vv > 0 and cov.det > 0
        a, b, c = cov.factors()
        assert np.allclose([[b * b + c * c, a * b], [a * b, a * a]], cov.matrix(), rtol=1e-9, atol=0)


def test_factors_reject_indefinite():
    with pytest.raises(NotPSDError):
        NoiseCov(1.0, 2.0, 1.0).factors()


def test_sample_hmc_noise_covariance():
    cov = hmc_noise_cov(HmcParams(0.09, 3.0, 2.0))
    xi_x, xi_v = sample_hmc_noise(cov, 200_000, np.random.default_rng(2))
    emp = np.cov(np.vstack([xi_x, xi_v]))
    assert np.allclose(emp, cov.matrix(), rtol=0.02, atol=0.02 * math.sqrt(cov.s_xx * cov.s_vv))


def test_transition_coefficients_match_oracle():
    for u, gamma, eta in PRESET_PARAMS:
        p = HmcParams(eta, gamma, u)
        want = hmc_linear_map(u, gamma, eta)
        got = np.array([[1 - p.x_grad_coef, p.x_vel_coef], [-p.v_grad_coef, p.decay]])
        assert np.allclose(got, want, rtol=1e-12, atol=0)


def test_noise_positive_correlation():
    cov = hmc_noise_cov(HmcParams(0.09, 3.0, 2.0))  # gamma * eta = 0.27
    xi_x, xi_v = sample_hmc_noise(cov, 100_000, np.random.default_rng(0))
    assert cov.s_xv > 0 and np.corrcoef(xi_x, xi_v)[0, 1] > 0


def test_coefficient_leading_orders():
    for eta in (1e-3, 1e-4, 1e-5):
        p = HmcParams(eta, 3.0, 2.0)
        assert 0 < p.x_grad_coef and 0 < p.v_grad_coef
        assert math.isclose(p.x_grad_coef / eta**2, 2.0 / 2, rel_tol=3 * 3.0 * eta)
        assert math.isclose(p.v_grad_coef / eta, 2.0, rel_tol=3 * 3.0 * eta)


def test_rescale_noop_when_mean_momentum_is_upper():
    from lpmc.samplers import _rescaled

    assert _rescaled(np.full(4, S84.upper), 1.0, S84.upper, True) == 1.0
    assert _rescaled(np.zeros(4), 0.7, S84.upper, True) == 0.7
    assert _rescaled(np.full(4, 3.0), 0.7, S84.upper, False) == 0.7


def test_step_sghmc_sign_of_gradient_term():
    p = HmcParams(0.09, 3.0, 2.0)
    s = step_sghmc(ChainState(np.array([1.0]), np.array([0.0])), np.array([1.0]), p, (0.0, 0.0))
    assert s.x[0] < 1.0 and s.v[0] < 0.0
    assert np.isclose(s.x[0], hmc_linear_map(2.0, 3.0, 0.09)[0, 0])


@pytest.mark.parametrize("target", ["gaussian", "mixture"])
@pytest.mark.parametrize("kind", KINDS)
def test_backends_agree(kind, target):
    src = GradSource(gaussian_target(2) if target == "gaussian" else mixture_target(), noise_sigma=0.1)
    cfg = make_config(kind, iterations=600, burn_in=100, thinning=5,
                      eta=0.1 if target == "mixture" else 0.09, u=1.0 if target == "mixture" else 2.0)
    a = run_chain(cfg, src, np.random.default_rng(11), backend="numba")
    b = run_chain(cfg, src, np.random.default_rng(11), backend="numpy")
    assert a.diagnostics["backend"] == "numba" and b.diagnostics["backend"] == "numpy"
    np.testing.assert_array_equal(a.iters, b.iters)
    np.testing.assert_allclose(a.x, b.x, rtol=0, atol=1e-9)
    if cfg.is_hmc:
        np.testing.assert_allclose(a.v, b.v, rtol=0, atol=1e-9)
    for key in ("weight_clipped", "grad_clipped", "cat_clamped"):
        assert a.diagnostics[key] == b.diagnostics[key]


@pytest.mark.parametrize("kind", ["sghmc_lpl", "sghmc_vc"])
def test_backends_agree_with_rescaling(kind):
    cfg = make_config(kind, iterations=500, rescale_momentum=True)
    a = run_chain(cfg, gaussian_target(1), np.random.default_rng(3), backend="numba")
    b = run_chain(cfg, gaussian_target(1), np.random.default_rng(3), backend="numpy")
    np.testing.assert_array_equal(a.x, b.x)
    np.testing.assert_allclose(a.s_v, b.s_v, rtol=1e-12)


@pytest.mark.parametrize("kind", KINDS)
def test_same_seed_same_chain(kind):
    cfg = make_config(kind, iterations=300)
    a = run_chain(cfg, gaussian_target(1), np.random.default_rng(5))
    b = run_chain(cfg, gaussian_target(1), np.random.default_rng(5))
    assert np.array_equal(a.x, b.x)


@pytest.mark.parametrize("kind", ["sgld_lpl", "sgld_vc", "sghmc_lpl", "sghmc_vc"])
def test_low_precision_state_is_on_grid(kind):
    cfg = make_config(kind, iterations=3000)
    ch = run_chain(cfg, mixture_target(), np.random.default_rng(0))
    assert S84.on_grid(ch.x).all()
    if ch.v is not None:
        assert S84.on_grid(ch.v).all()  # s_v stays 1 without rescaling


def test_rescaled_momentum_stays_representable():
    cfg = make_config("sghmc_lpl", iterations=2000, rescale_momentum=True)
    ch = run_chain(cfg, gaussian_target(3), np.random.default_rng(0))
    assert np.all(ch.s_v > 0)
    stored = ch.v / ch.s_v[:, None]
    assert np.allclose(stored / S84.delta, np.rint(stored / S84.delta), atol=1e-9)
    assert np.all((stored >= S84.lower - 1e-9) & (stored <= S84.upper + 1e-9))
    assert S84.on_grid(ch.final.v).all()


def test_record_schedule():
    ch = run_chain(make_config("sgld", iterations=100, burn_in=20, thinning=10), gaussian_target(1),
                   np.random.default_rng(0))
    assert ch.iters.tolist() == [30, 40, 50, 60, 70, 80, 90, 100]
    assert ch.v is None


def test_zero_records_when_iterations_equal_burn_in():
    ch = run_chain(make_config("sgld", iterations=50, burn_in=50), gaussian_target(1), np.random.default_rng(0))
    assert ch.x.shape == (0, 1)


@pytest.mark.parametrize("kwargs", [
    dict(kind="nope"), dict(kind="sgld_lpl", weight=False), dict(kind="sgld", rescale_momentum=True),
    dict(kind="sgld", burn_in=10_000), dict(kind="sgld", thinning=0),
])
def test_config_validation(kwargs):
    kind = kwargs.pop("kind")
    weight = kwargs.pop("weight", True)
    with pytest.raises(ValueError):
        SamplerConfig(kind, 100, eta=0.1, weight_spec=S84 if weight and kind != "sgld" else None, **kwargs)


def test_vc_needs_fixed_point():
    with pytest.raises(ValueError):
        SamplerConfig("sgld_vc", 10, eta=0.1, weight_spec=BfpSpec(8))


def test_bfp_lpf_chain_runs_on_numpy_path():
    cfg = SamplerConfig("sghmc_lpf", 200, hmc=HmcParams(0.09, 3.0, 2.0), weight_spec=BfpSpec(8))
    ch = run_chain(cfg, gaussian_target(4), np.random.default_rng(0), backend="numba")
    assert ch.diagnostics["backend"] == "numpy" and np.isfinite(ch.x).all()


def test_logistic_chain_minibatch(rng):
    x = rng.normal(size=(60, 4))
    ds = LabeledDataset(x, (x[:, 0] > 0).astype(int), 2)
    src = GradSource(logistic_target(ds, 0.5), batch_size=10)
    for kind in ("sgld_vc", "sghmc_lpl"):
        ch = run_chain(make_config(kind, iterations=200, eta=0.01, gamma=2.0), src, np.random.default_rng(1))
        assert ch.x.shape == (200, 8) and np.isfinite(ch.x).all()


def test_sgld_variance_matches_ar1():
    eta = 0.1
    xs = np.concatenate([run_chain(make_config("sgld", 200_000, eta=eta, burn_in=1000), gaussian_target(1),
                                   np.random.default_rng(s)).x[:, 0] for s in range(2)])
    assert abs(xs.var() / sgld_ar1_variance(eta) - 1) < 0.03


def test_sghmc_covariance_matches_lyapunov():
    sigma = stationary_hmc_cov(2.0, 3.0, 0.09)
    ch = run_chain(make_config("sghmc", 300_000, burn_in=1000), gaussian_target(1), np.random.default_rng(0))
    emp = np.cov(np.hstack([ch.x, ch.v]).T)
    assert abs(emp[0, 0] / sigma[0, 0] - 1) < 0.05
    assert abs(emp[1, 1] / sigma[1, 1] - 1) < 0.05


@pytest.mark.parametrize("ratio", [0.5, 3.0, 100.0])
def test_eta_for_var_ratio(ratio):
    eta = eta_for_var_ratio(ratio, 3.0, 2.0, S84.delta)
    assert math.isclose(hmc_noise_cov(HmcParams(eta, 3.0, 2.0)).s_xx, ratio * S84.delta**2 / 4, rel_tol=1e-10)


def test_vc_diagnostic_reports_dropped_cross_cov():
    ch = run_chain(make_config("sghmc_vc", 10), gaussian_target(1), np.random.default_rng(0))
    assert ch.diagnostics["vc_dropped_cross_cov"] == hmc_noise_cov(HmcParams(0.09, 3.0, 2.0)).s_xv


def test_env_flag_selects_numpy_backend():
    import subprocess
    import sys

    code = ("import numpy as np, lpmc; from lpmc import _jit; "
            "cfg = lpmc.SamplerConfig('sgld', 10, eta=0.1); "
            "ch = lpmc.run_chain(cfg, lpmc.gaussian_target(1), np.random.default_rng(0)); "
            "print(_jit.JIT_ENABLED, ch.diagnostics['backend'])")
    env = dict(__import__("os").environ, LPMC_DISABLE_JIT="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.split() == ["False", "numpy"]
