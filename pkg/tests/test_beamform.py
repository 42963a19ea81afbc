import json
import math

import numpy as np
import pytest

from chartbeam import beamform
from chartbeam.errors import ZeroChannelError, ZeroPrecoderError


class OraclePrecoders:
    """Stand-in model returning fixed raw outputs."""

    def __init__(self, w_raw):
        self.w_raw = np.asarray(w_raw, float)

    def forward(self, inputs):
        return self.w_raw[:len(np.atleast_2d(inputs))]


def as_raw(w_c):
    w_c = np.atleast_2d(w_c)
    return np.concatenate([w_c.real, w_c.imag], axis=1)


# ---------------------------------------------------------------------------
# precoder construction
# ---------------------------------------------------------------------------

def test_complexify_basis_vector():
    w = np.zeros(8)
    w[0] = 1.0
    p = beamform.complexify_normalize(w)
    expected = np.zeros(4, complex)
    expected[0] = 1.0
    np.testing.assert_allclose(p.values, expected)


def test_complexify_scale_invariant(rng):
    w = rng.standard_normal(12)
    p1 = beamform.complexify_normalize(w)
    p2 = beamform.complexify_normalize(10.0 * w)
    np.testing.assert_allclose(p1.values, p2.values, atol=1e-15)


def test_complexify_unit_norm(rng):
    for _ in range(20):
        p = beamform.complexify_normalize(rng.standard_normal(16))
        assert abs(np.linalg.norm(p.values) - 1.0) < 1e-12


def test_complexify_zero_rejected():
    with pytest.raises(ZeroPrecoderError):
        beamform.complexify_normalize(np.zeros(8))


# ---------------------------------------------------------------------------
# eta and capacity
# ---------------------------------------------------------------------------

def test_eta_matched_filter_is_one(rng):
    g = rng.standard_normal(6) + 1j * rng.standard_normal(6)
    assert abs(beamform.eta(g / np.linalg.norm(g), g) - 1.0) < 1e-12


def test_eta_orthogonal_is_zero():
    w = np.array([1.0 + 0j, 0.0])
    g = np.array([0.0, 2.0 + 1j])
    assert beamform.eta(w, g) < 1e-12


def test_eta_half_power_example():
    w = np.array([1.0 + 0j, 0.0])
    g = np.array([1.0 + 0j, 1.0 + 0j])
    assert abs(beamform.eta(w, g) - 0.5) < 1e-15


def test_eta_phase_invariance(rng):
    w = rng.standard_normal(8) + 1j * rng.standard_normal(8)
    w /= np.linalg.norm(w)
    g = rng.standard_normal(8) + 1j * rng.standard_normal(8)
    base = beamform.eta(w, g)
    for _ in range(10):
        p1 = np.exp(1j * rng.uniform(0, 2 * np.pi))
        p2 = np.exp(1j * rng.uniform(0, 2 * np.pi))
        assert abs(beamform.eta(p1 * w, p2 * g) - base) < 1e-12


def test_eta_one_iff_proportional(rng):
    g = rng.standard_normal(5) + 1j * rng.standard_normal(5)
    w = g * np.exp(1j * 0.7) / np.linalg.norm(g)
    assert abs(beamform.eta(w, g) - 1.0) < 1e-9
    other = rng.standard_normal(5) + 1j * rng.standard_normal(5)
    other /= np.linalg.norm(other)
    if abs(np.vdot(other, g)) ** 2 / np.vdot(g, g).real < 1 - 1e-6:
        assert beamform.eta(other, g) < 1.0 - 1e-9


def test_eta_zero_channel_rejected():
    with pytest.raises(ZeroChannelError):
        beamform.eta(np.array([1.0 + 0j]), np.array([0.0 + 0j]))


def test_spectral_efficiency_values():
    assert beamform.spectral_efficiency(0.0, 10.0) == 0.0
    assert abs(beamform.spectral_efficiency(1.0, 1.0) - 1.0) < 1e-15
    assert abs(beamform.spectral_efficiency(0.5, 3.0) - math.log2(2.5)) < 1e-12
    with pytest.raises(ValueError):
        beamform.spectral_efficiency(0.5, -1.0)


# ---------------------------------------------------------------------------
# evaluation reports
# ---------------------------------------------------------------------------

def make_report(rng, m=50, a=4, s=16):
    g = rng.standard_normal((m, a)) + 1j * rng.standard_normal((m, a))
    w_raw = as_raw(g * rng.uniform(0.5, 2.0))  # perfectly aligned precoders
    model = OraclePrecoders(w_raw)
    locations = rng.uniform(0, 10, (m, 3))
    los = rng.integers(0, 2, (m, 2)).astype(np.uint8)
    return beamform.evaluate(model, rng.standard_normal((m, 5)), g, locations,
                             los, "VT", transfer_dim=5, num_subcarriers=s)


def test_evaluate_perfect_precoders_point_mass(rng):
    report = make_report(rng)
    np.testing.assert_allclose(report.eta_values, 1.0, atol=1e-12)
    x, p = report.cdf()
    assert p[-1] == 1.0
    assert np.all(np.diff(p) >= 0)


def test_evaluate_overhead_ratio(rng):
    report = make_report(rng, a=64, s=16)
    overhead = report.overhead()
    assert overhead["ratio"] == 5 / 2048
    assert overhead["raw_floats_per_user"] == 2 * 64 * 16


def test_evaluate_excludes_zero_targets(rng):
    m, a = 20, 4
    g = rng.standard_normal((m, a)) + 1j * rng.standard_normal((m, a))
    g[3] = 0.0
    g[11] = 0.0
    model = OraclePrecoders(as_raw(np.where(np.abs(g) > 0, g, 1.0)))
    report = beamform.evaluate(model, rng.standard_normal((m, 5)), g,
                               rng.uniform(0, 1, (m, 3)),
                               np.zeros((m, 2), np.uint8), "VT",
                               transfer_dim=5, num_subcarriers=16)
    assert report.excluded == 2
    assert report.eta_values.size == m - 2


def test_report_csv_schema(tmp_path, rng):
    report = make_report(rng, m=10)
    report.save(tmp_path)
    cdf_lines = (tmp_path / "cdf_VT.csv").read_text().splitlines()
    assert cdf_lines[0] == "eta,cdf"
    assert len(cdf_lines) == 11
    spatial_lines = (tmp_path / "spatial_VT.csv").read_text().splitlines()
    assert spatial_lines[0] == "x,y,eta,los_bs1,los_bs2"
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["variant"] == "VT"
    assert {"eta_mean", "eta_median", "eta_p10", "overhead"} <= set(summary)


def test_report_csv_bit_stable(tmp_path, rng):
    report = make_report(rng, m=10)
    report.save(tmp_path / "a")
    report.save(tmp_path / "b")
    assert ((tmp_path / "a" / "cdf_VT.csv").read_bytes()
            == (tmp_path / "b" / "cdf_VT.csv").read_bytes())


def test_cdf_monotone_ends_at_one(rng):
    report = make_report(rng, m=33)
    x, p = report.cdf()
    assert np.all(np.diff(x) >= 0)
    assert np.all(np.diff(p) > 0)
    assert np.isclose(p[-1], 1.0)
