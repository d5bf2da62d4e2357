from __future__ import annotations

import numpy as np
import pytest

from helpers import mean_se
from ringout.profiles import Uniform, realize, ring_radii
from ringout.randmat import (
    SeededStream,
    assemble_isotropic,
    read_matrix_csv,
    sample_ginibre,
    sample_haar_isometry,
    sample_haar_unitary,
    write_matrix_csv,
)


def test_haar_n1_is_phase():
    u = sample_haar_unitary(1, SeededStream(0))
    assert u.shape == (1, 1)
    assert abs(u[0, 0]) == pytest.approx(1.0, abs=1e-14)


def test_haar_first_moment_n4():
    u = sample_haar_unitary(4, SeededStream(1), size=10_000)
    assert np.mean(np.abs(u[:, 0, 0]) ** 2) == pytest.approx(0.25, abs=0.02)


def test_haar_crossed_moment_n3():
    n = 3
    u = sample_haar_unitary(n, SeededStream(2), size=100_000)
    val = u[:, 0, 0] * u[:, 1, 1] * u[:, 0, 1].conj() * u[:, 1, 0].conj()
    assert abs(val.mean() - (-1 / (n * (n * n - 1)))) <= 0.01


def test_haar_phase_correction_matters():
    # Without the phase correction the diagonal of Q has a biased argument;
    # with it E[u_11] is zero.
    u = sample_haar_unitary(3, SeededStream(3), size=50_000)
    m, se = mean_se(u[:, 0, 0])
    assert abs(m) < 4 * se


@pytest.mark.parametrize("n", [1, 7, 200, 2000])
def test_unitarity_residual(n):
    u = sample_haar_unitary(n, SeededStream(4, n))
    res = np.max(np.abs(u.conj().T @ u - np.eye(n)))
    assert res <= 1e-12 * np.sqrt(n)


def test_isometry_columns_orthonormal():
    w = sample_haar_isometry(50, 4, SeededStream(5))
    assert w.shape == (50, 4)
    assert np.allclose(w.conj().T @ w, np.eye(4), atol=1e-13)


def test_isometry_rejects_bad_shape():
    with pytest.raises(ValueError):
        sample_haar_isometry(3, 4, SeededStream(0))


def test_streams_reproducible_and_distinct():
    a = sample_haar_unitary(5, SeededStream(9, 3))
    b = sample_haar_unitary(5, SeededStream(9, 3))
    c = sample_haar_unitary(5, SeededStream(9, 4))
    assert a.tobytes() == b.tobytes()
    assert not np.allclose(a, c)
    assert SeededStream(9, 3).child(1).generator().random() != SeededStream(9, 3).child(2).generator().random()


def test_streams_independent_correlation():
    x = SeededStream(1, 0).generator().standard_normal(20_000)
    y = SeededStream(1, 1).generator().standard_normal(20_000)
    assert abs(np.corrcoef(x, y)[0, 1]) < 4 / np.sqrt(20_000)


def test_ginibre_n1_centered():
    gen = SeededStream(6).generator()
    draws = np.array([sample_ginibre(1, gen)[0, 0] for _ in range(100_000)])
    assert abs(draws.mean()) <= 0.02
    assert np.mean(np.abs(draws) ** 2) == pytest.approx(1.0, abs=0.02)


def test_ginibre_normalized_trace():
    gen = SeededStream(7).generator()
    vals = [np.trace(g @ g.conj().T).real / 100 for g in (sample_ginibre(100, gen) for _ in range(100))]
    assert np.mean(vals) == pytest.approx(1.0, abs=0.05)


@pytest.mark.slow
def test_ginibre_spectral_radius():
    gen = SeededStream(8).generator()
    ok = sum(np.max(np.abs(np.linalg.eigvals(sample_ginibre(500, gen)))) <= 1.15 for _ in range(100))
    assert ok >= 99


def test_isotropic_identity_singular_values_is_unitary():
    a = assemble_isotropic(np.ones(6), SeededStream(10))
    assert np.max(np.abs(a.conj().T @ a - np.eye(6))) <= 1e-10


@pytest.mark.parametrize("form", ["UT", "UTV"])
def test_isotropic_singular_values(form):
    a = assemble_isotropic([1.0, 2.0], SeededStream(11), form=form)
    assert sorted(np.linalg.svd(a, compute_uv=False)) == pytest.approx([1.0, 2.0], abs=1e-10)


def test_isotropic_rejects_unknown_form():
    with pytest.raises(ValueError):
        assemble_isotropic([1.0], SeededStream(0), form="VT")  # type: ignore[arg-type]


def test_isotropic_spectral_radius_near_b():
    prof = Uniform(0.5, 4.0)
    b = ring_radii(prof).b
    a = assemble_isotropic(realize(prof, 1000), SeededStream(12))
    rho = np.max(np.abs(np.linalg.eigvals(a)))
    assert b - 0.15 <= rho <= b + 0.15


def test_isotropic_reproducible():
    s = realize(Uniform(0.5, 4.0), 30)
    a = assemble_isotropic(s, SeededStream(13, 2), form="UTV")
    b = assemble_isotropic(s, SeededStream(13, 2), form="UTV")
    assert a.tobytes() == b.tobytes()


def test_matrix_csv_roundtrip(tmp_path):
    m = sample_ginibre(4, SeededStream(14))
    write_matrix_csv(tmp_path / "m.csv", m)
    assert np.array_equal(read_matrix_csv(tmp_path / "m.csv"), m)
