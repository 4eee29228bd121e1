import numpy as np
import pytest

from invspec.core import PI
from invspec.errors import ConfigError
from invspec.roundtrip import (
    InverseParams,
    example6_F,
    example6_P,
    example6_data,
    example6_oracle,
    example6_q,
    EXAMPLE6_COT_BETA,
    inverse_pipeline,
    roundtrip,
)


def test_roundtrip_zero_potential(q_zero):
    report, inv = roundtrip(q_zero, PI / 2, 32)
    assert report.q_sup_error < 1e-6
    assert abs(inv.beta_rec.beta_tilde - PI / 2) < 1e-8
    assert report.angle_identity_gap < 1e-6


def test_roundtrip_requires_enough_modes(q_zero):
    with pytest.raises(ConfigError):
        roundtrip(q_zero, PI / 2, 8)


def test_roundtrip_cos_accuracy(roundtrip_cos):
    report, _ = roundtrip_cos[64]
    assert report.q_sup_error <= 5e-2
    assert report.angle_identity_gap <= 5e-3


def test_roundtrip_cos_monotone_in_data_length(roundtrip_cos):
    errs = [roundtrip_cos[n][0].q_sup_error for n in (16, 32, 64)]
    for a, b in zip(errs, errs[1:]):
        assert b <= 1.1 * a


def test_roundtrip_report_fields(roundtrip_cos):
    report, _ = roundtrip_cos[32]
    d = report.to_dict()
    for key in ("q_sup_error", "q_l1_error", "beta_gap", "angle_identity_gap",
                "n_eigen", "n_terms", "n_quad", "x_nodes", "trim", "consistency"):
        assert key in d
    assert d["q_sup_error"] >= 0 and np.isfinite(d["q_sup_error"])
    assert d["q_l1_error"] >= 0 and np.isfinite(d["q_l1_error"])
    assert d["beta_gap"] >= 0


def test_roundtrip_decreases_with_quadrature(q_cos):
    # holding everything else fixed, a finer row quadrature cannot hurt (10% slack)
    errs = []
    for n_quad in (32, 64):
        params = InverseParams(n_terms=600, n_quad=n_quad, x_nodes=65)
        report, _ = roundtrip(q_cos, PI / 3, 16, trim=(0.1 * PI, 0.95 * PI), params=params)
        errs.append(report.q_sup_error)
    assert errs[1] <= 1.1 * errs[0]


def test_roundtrip_decreases_with_series_length(q_cos):
    errs = []
    for n_terms in (250, 1000):
        params = InverseParams(n_terms=n_terms, n_quad=64, x_nodes=65)
        report, _ = roundtrip(q_cos, PI / 3, 16, trim=(0.1 * PI, 0.95 * PI), params=params)
        errs.append(report.q_sup_error)
    assert errs[1] <= 1.1 * errs[0]


# --- reference-example oracle -----------------------------------------------------


def test_example6_spot_values():
    # F(pi/2, pi/2) = (2/pi) sin^2(pi/4) = 1/pi; P(pi,pi) = -1/pi
    assert example6_F(PI / 2, PI / 2) == pytest.approx(1.0 / PI, rel=1e-15)
    assert example6_P(PI, PI) == pytest.approx(-1.0 / PI, rel=1e-15)
    x = PI / 2
    expect = 2 * np.sin(x) / (np.sin(x) - x - PI) \
        - 4 * (np.cos(x) - 1) * np.sin(x / 2) ** 2 / (np.sin(x) - x - PI) ** 2
    assert example6_q(x) == pytest.approx(expect, rel=1e-15)
    assert EXAMPLE6_COT_BETA == pytest.approx(1.0 / PI, rel=1e-15)


def test_example6_oracle_passes():
    report = example6_oracle()
    assert report["all_pass"], report["checks"]
    names = [c["name"] for c in report["checks"]]
    assert names == ["kernel-F-closed-form", "kernel-P-closed-form",
                     "potential-closed-form", "recovered-angle"]


def test_example6_reconstruction_feeds_forward():
    # the recovered (q, angle) must reproduce the half-integer spectrum
    from invspec.forward import eigenvalues
    inv = inverse_pipeline(example6_data(40))
    beta_tilde = inv.beta_rec.beta_tilde
    mus = eigenvalues(inv.q_hat, beta_tilde, 8)
    expect = (np.arange(8) + 0.5) ** 2
    assert np.max(np.abs(mus - expect)) < 1e-4


def test_roundtrip_angle_differs_from_input_legitimately(roundtrip_cos):
    # the recovered angle need not equal the input one; what must hold is the
    # cot identity against the fitted drift and the recovered integral
    report, inv = roundtrip_cos[64]
    assert report.beta_gap < 5e-3  # integral of cos vanishes, so they are close here
    assert inv.beta_rec.prediction_gap <= 1e-3


def test_drift_fit_sharpens_with_data_length(roundtrip_cos):
    # fitted drift constant approaches the true mean (zero) as N grows
    cs = [abs(roundtrip_cos[n][1].data.c_fit) for n in (16, 32, 64)]
    assert cs[1] < cs[0] and cs[2] < cs[1]
    assert cs[2] < 1e-3
