import json
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ci_lab.codes import CssCode, build_color_488, build_lcs, build_toric, from_spec
from ci_lab.erasure_ci import ErasureConfig, analyze
from ci_lab.gf2_linalg import BitMatrix
from ci_lab.noise import NoiseSpec, PauliChannel, bit_phase_flip, depolarizing
from ci_lab.pauli_ci import ConfigEvaluator, _channel_mode, pauli_ci
from ci_lab.statmech import (SCHEMA, build_spin_model, ci_statmech, defect_set, eta_from_error, export_model,
                             import_model, log_partition, log_ratio, model_from_dict, model_to_dict, sample_eta,
                             term_sizes)

CHANNELS = [bit_phase_flip(0.1), depolarizing(0.15), PauliChannel(0.05, 0.03, 0.08)]


def test_terms_read_off_checks():
    code = build_color_488(5)
    model = build_spin_model(code, depolarizing(0.1))
    for q in range(code.n):
        assert list(model.x_terms[q]) == np.flatnonzero(code.hx_dense[:, q]).tolist()
        assert list(model.z_terms[q]) == np.flatnonzero(code.hz_dense[:, q]).tolist()
    assert len(model.x_terms) == code.n


def test_toric_terms():
    code = build_toric(3)
    model = build_spin_model(code, depolarizing(0.1))
    for sector, h in (("X", code.hx_dense), ("Z", code.hz_dense)):
        sizes = np.array(term_sizes(model, sector))
        # two-spin everywhere except on the edges of the dropped redundant generator
        full = np.vstack([h, h.sum(axis=0) % 2])
        dropped = np.flatnonzero(full[-1])
        assert (sizes[dropped] == 1).all() and dropped.size == 4
        assert (np.delete(sizes, dropped) == 2).all()


def test_color_terms():
    model = build_spin_model(build_color_488(3), depolarizing(0.1))
    sizes = term_sizes(model, "X")
    assert max(sizes) == 3 and sizes.count(3) == 1
    assert term_sizes(model, "Z") == sizes


def test_lcs_term_multiset():
    model = build_spin_model(build_lcs(3, 1), depolarizing(0.1))
    for sector in ("X", "Z"):
        assert Counter(term_sizes(model, sector)) == {1: 6, 2: 6, 3: 3}


def test_dependent_checks_rejected():
    code = build_color_488(3)
    hx = np.vstack([code.hx_dense, code.hx_dense[:1]])
    bad = CssCode("dup", 7, 1, BitMatrix.from_dense(hx), code.hz, code.lx, code.lz, 3)
    with pytest.raises(ValueError):
        build_spin_model(bad, depolarizing(0.1))


def test_zero_component_rejected():
    with pytest.raises(ValueError):
        build_spin_model(build_color_488(3), PauliChannel(0.1, 0.0, 0.1))


def test_zero_couplings_count_states():
    code = build_color_488(3)
    model = build_spin_model(code, depolarizing(0.75))
    eta = sample_eta(NoiseSpec(depolarizing(0.3), 0.2), code.n, 1)
    assert log_partition(model, eta) == pytest.approx((model.x_spins + model.z_spins) * np.log(2), abs=1e-12)


def test_identity_defect_is_z0():
    code = build_color_488(3)
    model = build_spin_model(code, bit_phase_flip(0.1))
    eta = sample_eta(NoiseSpec(bit_phase_flip(0.1)), code.n, 2)
    assert log_partition(model, eta, 0) == log_partition(model, eta)


def test_size_bound():
    model = build_spin_model(from_spec("surface:7"), depolarizing(0.1))
    with pytest.raises(ValueError):
        log_partition(model, np.ones((49, 2)))


@pytest.mark.parametrize("spec", ["surface:3", "color:3", "toric:2", "lcs:3,1"])
@pytest.mark.parametrize("ch", CHANNELS)
@settings(max_examples=10)
@given(seed=st.integers(0, 10 ** 6))
def test_gauge_invariance(spec, ch, seed):
    code = from_spec(spec)
    model = build_spin_model(code, ch)
    rng = np.random.default_rng(seed)
    eta = sample_eta(NoiseSpec(ch, 0.2), code.n, rng)
    base = log_partition(model, eta, 1)
    for sector, h in ((0, code.hx_dense), (1, code.hz_dense)):
        g = h[rng.integers(h.shape[0])]
        moved = eta.copy()
        moved[:, sector] *= (1 - 2 * g).astype(np.int8)
        assert log_partition(model, moved, 1) == pytest.approx(base, abs=1e-10)


@pytest.mark.parametrize("spec", ["surface:3", "color:3", "lcs:3,1"])
def test_defect_representative_irrelevant(spec):
    code = from_spec(spec)
    ch = depolarizing(0.12)
    model = build_spin_model(code, ch)
    rng = np.random.default_rng(7)
    for _ in range(50):
        lx, lz = code.lx_dense.copy(), code.lz_dense.copy()
        lx[rng.integers(code.k)] ^= code.hx_dense[rng.integers(code.hx.rows)]
        lz[rng.integers(code.k)] ^= code.hz_dense[rng.integers(code.hz.rows)]
        other = CssCode(code.name, code.n, code.k, code.hx, code.hz, BitMatrix.from_dense(lx),
                        BitMatrix.from_dense(lz), code.declared_distance)
        alt = build_spin_model(other, ch)
        eta = sample_eta(NoiseSpec(ch, 0.1), code.n, rng)
        for defect in range(1, 1 << (2 * code.k)):
            assert log_partition(alt, eta, defect) == pytest.approx(log_partition(model, eta, defect), abs=1e-10)


@pytest.mark.parametrize("spec", ["surface:3", "color:3", "toric:2"])
@pytest.mark.parametrize("ch", CHANNELS)
def test_matches_coset_log_ratio(spec, ch):
    code = from_spec(spec)
    model = build_spin_model(code, ch)
    for i in range(20):
        eta = sample_eta(NoiseSpec(ch, 0.25), code.n, np.random.SeedSequence([3, i]))
        erased = np.flatnonzero(eta[:, 0] == 0)
        cfg = ErasureConfig.from_indices(code.n, erased)
        lr = log_ratio(model, eta, defect_set(analyze(code, cfg)))
        assert lr >= -1e-12
        ev = ConfigEvaluator(code, cfg, _channel_mode([ch]))
        assert lr == pytest.approx(ev.log_ratio(ch, eta[:, 0] == -1, eta[:, 1] == -1), abs=1e-9)


def test_defect_set_size():
    code = from_spec("lcs:3,1")
    ana = analyze(code, ErasureConfig.from_indices(code.n, [0, 3, 6]))
    d = defect_set(ana)
    assert d.labels.size == 1 << ana.class_bits
    assert np.unique(d.labels).size == d.labels.size
    assert np.array_equal(d.x_part @ ana.vz.to_dense().T % 2, np.eye(ana.vz.rows))


def test_eta_from_error():
    eta = eta_from_error(np.array([1, 0, 1, 0]), np.array([0, 0, 1, 1]), erased=[1])
    assert eta.tolist() == [[-1, 1], [0, 0], [-1, -1], [1, -1]]


def test_sample_eta_examples():
    assert (sample_eta(NoiseSpec(depolarizing(0.3), 1.0), 20, 0) == 0).all()
    assert (sample_eta(NoiseSpec(depolarizing(0.0), 0.0), 20, 0) == 1).all()


def test_sample_eta_frequencies():
    spec = NoiseSpec(PauliChannel(0.1, 0.05, 0.15), 0.2)
    n = 10 ** 6
    eta = sample_eta(spec, n, 42)
    code = (eta[:, 0] == -1) * 1 + (eta[:, 1] == -1) * 2 + (eta[:, 0] == 0) * 4
    counts = Counter(code.tolist())
    # I, X, Y, Z and erased masses
    expected = {0: 0.7 * 0.8, 1: 0.1 * 0.8, 3: 0.05 * 0.8, 2: 0.15 * 0.8, 4: 0.2}
    for key, m in expected.items():
        assert abs(counts[key] - n * m) <= 5 * np.sqrt(n * m * (1 - m))


def test_ci_statmech_exact_mode():
    code = from_spec("surface:3")
    ci, err = ci_statmech(code, NoiseSpec(bit_phase_flip(0.05)))
    assert err == 0.0
    assert ci == pytest.approx(pauli_ci(code, bit_phase_flip(0.05)), abs=1e-9)


def test_ci_statmech_small_noise():
    code = from_spec("color:3")
    ci, _ = ci_statmech(code, NoiseSpec(depolarizing(1e-9)))
    assert ci == pytest.approx(1.0, abs=1e-6)


def test_ci_statmech_full_erasure():
    for spec in ("surface:3", "color:3"):
        ci, err = ci_statmech(from_spec(spec), NoiseSpec(depolarizing(0.1), 1.0), disorder_samples=5)
        assert ci == -1.0 and err == 0.0


def test_ci_statmech_sampled_deterministic():
    code = from_spec("color:3")
    spec = NoiseSpec(depolarizing(0.1), 0.2)
    assert ci_statmech(code, spec, 50, seed=4) == ci_statmech(code, spec, 50, seed=4)


@pytest.mark.parametrize("spec,terms", [("lcs:3,1", 15), ("toric:3", 18)])
def test_export_roundtrip(tmp_path, spec, terms):
    model = build_spin_model(from_spec(spec), depolarizing(0.1))
    path = tmp_path / "model.json"
    export_model(model, path)
    doc = json.loads(path.read_text())
    assert doc["schema"] == SCHEMA and len(doc["terms"]) == terms
    assert import_model(path) == model


def test_import_rejects_other_versions():
    doc = model_to_dict(build_spin_model(from_spec("color:3"), depolarizing(0.1)))
    with pytest.raises(ValueError):
        model_from_dict({**doc, "version": 99})
    with pytest.raises(ValueError):
        model_from_dict({**doc, "schema": "other"})
