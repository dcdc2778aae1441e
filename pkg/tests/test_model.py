import numpy as np
import pytest
from hypothesis import given, strategies as st

from factorlat import kernels
from factorlat.lattice import LatticeSpec, SizeError
from factorlat.model import (Hamiltonian, ModelParams, apply_hamiltonian,
                             canonical_transform, dense_matrix)
from factorlat.observables import correlators

from conftest import random_state

SS = np.array([[0.25, 0, 0, 0],
               [0, -0.25, 0.5, 0],
               [0, 0.5, -0.25, 0],
               [0, 0, 0, 0.25]])


def test_two_site_heisenberg_matches_ss():
    lat = LatticeSpec.chain(2, "open")
    m = dense_matrix(ModelParams(), lat)
    assert np.allclose(m, SS, atol=1e-15)
    assert np.allclose(np.linalg.eigvalsh(m), [-0.75, 0.25, 0.25, 0.25])
    ham = Hamiltonian(ModelParams(), lat)
    cols = np.array([ham.apply(e) for e in np.eye(4)]).T
    assert np.allclose(cols, SS, atol=1e-15)


def test_ring_of_four_ground_energy():
    w = np.linalg.eigvalsh(dense_matrix(ModelParams(), LatticeSpec.chain(4)))
    assert w[0] == pytest.approx(-2.0, abs=1e-12)


def test_large_field_selects_all_up():
    lat = LatticeSpec.chain(4)
    m = dense_matrix(ModelParams(delta_y=0.3, delta_z=0.7, field=(0, 0, 100)), lat)
    _, v = np.linalg.eigh(m)
    assert abs(v[0, 0]) ** 2 > 0.999


def random_params(rng, complex_field=True, pin=True):
    h = rng.uniform(-2, 2, 3)
    if not complex_field:
        h[1] = 0.0
    return ModelParams(delta_y=rng.uniform(0, 3), delta_z=rng.uniform(0, 3),
                       field=tuple(h), pinning=rng.uniform(0, 0.5) if pin else 0.0,
                       exchange=rng.uniform(0.5, 2))


@pytest.mark.parametrize("backend", ["cython", "python"])
@pytest.mark.parametrize("lattice", [LatticeSpec.chain(6), LatticeSpec.chain(5, "open"),
                                     LatticeSpec.square(4, 3, "open")])
def test_matvec_matches_dense(backend, lattice, rng):
    if backend == "cython" and kernels.BACKEND != "cython":
        pytest.skip("compiled kernels not built")
    for complex_field in (True, False):
        p = random_params(rng, complex_field)
        m = dense_matrix(p, lattice)
        ham = Hamiltonian(p, lattice)
        assert np.max(np.abs(m - m.conj().T)) < 1e-14
        for _ in range(10):
            v = random_state(ham.dim, rng, complex_=complex_field)
            assert np.max(np.abs(ham.apply(v, backend=backend) - m @ v)) < 1e-12


def test_sector_kernel_matches_full(rng):
    lat = LatticeSpec.chain(8)
    ham = Hamiltonian(ModelParams(delta_y=0.4, delta_z=1.3, field=(0, 0, 0.7)), lat)
    for parity in (1, -1):
        sec = ham.sector(parity)
        x = rng.normal(size=sec.dim)
        full = ham.apply(sec.embed(x))
        for backend in ("python", kernels.BACKEND):
            assert np.allclose(sec.apply(x, backend=backend), full[sec.indices], atol=1e-13)
        # nothing leaks into the other sector
        mask = np.ones(ham.dim, bool)
        mask[sec.indices] = False
        assert np.max(np.abs(full[mask])) < 1e-14


def test_sector_refused_with_inplane_field():
    ham = Hamiltonian(ModelParams(field=(0.1, 0, 0)), LatticeSpec.chain(4))
    with pytest.raises(ValueError):
        ham.sector(1)


def test_dtype_real_without_hy():
    lat = LatticeSpec.chain(4)
    assert Hamiltonian(ModelParams(field=(1, 0, 1), pinning=0.1), lat).dtype == np.float64
    assert Hamiltonian(ModelParams(delta_y=2, pinning=0.1), lat).dtype == np.complex128
    assert Hamiltonian(ModelParams(field=(0, 1, 0)), lat).dtype == np.complex128


def test_dimension_and_cap_errors():
    lat = LatticeSpec.chain(4)
    with pytest.raises(ValueError):
        apply_hamiltonian(ModelParams(), lat, np.ones(8))
    with pytest.raises(SizeError):
        Hamiltonian(ModelParams(), LatticeSpec.chain(26))
    with pytest.raises(SizeError):
        dense_matrix(ModelParams(), LatticeSpec.chain(14))


def test_invalid_params():
    with pytest.raises(ValueError):
        ModelParams(delta_y=-1)
    with pytest.raises(ValueError):
        ModelParams(field=(np.nan, 0, 0))
    with pytest.raises(ValueError):
        ModelParams(pinning=-0.1)


def test_pinning_is_staggered_along_order_axis():
    lat = LatticeSpec.chain(4)
    h = ModelParams(delta_y=0.5, pinning=0.1).site_fields(lat)
    assert np.allclose(h[:, 0], [0.1, -0.1, 0.1, -0.1]) and not h[:, 1:].any()
    h = ModelParams(delta_y=3, pinning=0.1).site_fields(lat)
    assert np.allclose(h[:, 1], [0.1, -0.1, 0.1, -0.1]) and not h[:, [0, 2]].any()


def test_for_lattice_normalization():
    assert ModelParams.for_lattice(LatticeSpec.chain(6)).exchange == 2.0
    assert ModelParams.for_lattice(LatticeSpec.square(4, 4)).exchange == 1.0


def test_canonical_transform(rng):
    lat = LatticeSpec.chain(8)
    p = ModelParams(delta_y=0.25, field=(0, 0, 1.3))
    v = random_state(2 ** 8, rng)
    u = canonical_transform(v, lat.labels)
    assert np.array_equal(canonical_transform(u, lat.labels), v)
    e_orig = Hamiltonian(p, lat).expectation(v)
    e_rot = Hamiltonian(p, lat, frame="transformed").expectation(u)
    assert e_rot == pytest.approx(e_orig, abs=1e-12)
    g, gt = correlators(v, 0, 1), correlators(u, 0, 1)
    assert gt[0] == pytest.approx(-g[0], abs=1e-14)
    assert gt[2] == pytest.approx(g[2], abs=1e-14)


@pytest.mark.parametrize("lattice", [LatticeSpec.chain(8), LatticeSpec.square(4, 2, "open")])
def test_frame_spectra_agree(lattice, rng):
    p = random_params(rng)
    a = np.linalg.eigvalsh(dense_matrix(p, lattice))
    b = np.linalg.eigvalsh(dense_matrix(p, lattice, frame="transformed"))
    assert np.max(np.abs(a - b)) < 1e-10


@given(st.floats(-3, 3), st.floats(-3, 3), st.integers(0, 2 ** 32 - 1))
def test_linearity_and_hermiticity(alpha, beta, seed):
    rng = np.random.default_rng(seed)
    lat = LatticeSpec.chain(6)
    ham = Hamiltonian(random_params(rng), lat)
    u = random_state(ham.dim, rng, True)
    v = random_state(ham.dim, rng, True)
    lhs = ham.apply(alpha * u + beta * v)
    rhs = alpha * ham.apply(u) + beta * ham.apply(v)
    assert np.max(np.abs(lhs - rhs)) < 1e-12
    assert abs(np.vdot(u, ham.apply(v)) - np.conj(np.vdot(v, ham.apply(u)))) < 1e-12


@given(st.integers(0, 2 ** 32 - 1))
def test_real_vectors_stay_real(seed):
    rng = np.random.default_rng(seed)
    lat = LatticeSpec.chain(6)
    p = ModelParams(delta_y=rng.uniform(0, 1), field=(rng.uniform(-1, 1), 0, 1.0),
                    pinning=0.01)
    out = Hamiltonian(p, lat).apply(rng.normal(size=64))
    assert out.dtype == np.float64
