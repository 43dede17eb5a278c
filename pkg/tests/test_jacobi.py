import numpy as np
import pytest

from conftest import random_ambient_field

from geodesicnets import (
    GraphClass,
    NetField,
    classify_field,
    hessian_form,
    is_nondegenerate,
    jacobi_kernel,
    jacobi_ode_coefficients,
    make_case,
    parallel_frame,
    reduced_hessian_fd,
    reduced_kernel_dimension,
)
from geodesicnets import stencils as st
from geodesicnets.geometry import ConstantField, conformal_family, g_dot, g_norm
from geodesicnets.jacobi import assemble_jacobi_system, random_reduced_field
from geodesicnets.net import resample


def edge_frame(case, eid):
    net = case.net
    s = net.edge_samples[eid]
    shift = net.loop_shift(eid)
    v = st.velocity(s, loop_shift=shift)
    return s, v, parallel_frame(case.chart, s, v, loop_shift=shift)


# -- frames ------------------------------------------------------------------

def test_frame_constant_on_flat_edge():
    case = make_case("honeycomb-torus", 64)
    s, v, frames = edge_frame(case, "E1")
    assert np.abs(frames - frames[0]).max() < 1e-12


def test_frame_unit_norm_on_equator():
    case = make_case("sphere-equator", 128)
    s, v, frames = edge_frame(case, "E")
    norms = g_norm(case.chart, s, frames[:, 0, :])
    assert np.abs(norms - 1.0).max() < 1e-8


def test_frame_orthogonal_to_tangent():
    case = make_case("sphere-theta", 64)
    s, v, frames = edge_frame(case, "E1")
    pair = g_dot(case.chart, s, frames[:, 0, :], v)
    assert np.abs(pair).max() < 1e-10


def test_frame_loop_holonomy_identity():
    for name in ("flat-loop", "sphere-equator"):
        case = make_case(name, 128)
        s, v, frames = edge_frame(case, "E")
        g0 = case.chart.metric(s[0])
        o = frames[-1, 0] @ g0 @ frames[0, 0]
        assert abs(abs(o) - 1.0) < 1e-6
        assert abs(o - 1.0) < 1e-6  # orientable cases: identity


# -- curvature coefficients --------------------------------------------------

def test_jacobi_coefficients_flat_zero():
    case = make_case("honeycomb-torus", 64)
    s, v, frames = edge_frame(case, "E1")
    k_mat = jacobi_ode_coefficients(case.chart, s, v, frames)
    assert np.abs(k_mat).max() < 1e-12


def test_jacobi_coefficients_equator_constant():
    case = make_case("sphere-equator", 128)
    s, v, frames = edge_frame(case, "E")
    k_mat = jacobi_ode_coefficients(case.chart, s, v, frames)
    l_e = case.net.lengths["E"]
    # K in arc-length normalization is the unit sectional curvature
    assert np.abs(k_mat[:, 0, 0] / l_e**2 - 1.0).max() < 1e-5


def test_jacobi_coefficients_quadratic_in_speed():
    case = make_case("sphere-equator", 128)
    s, v, frames = edge_frame(case, "E")
    k1 = jacobi_ode_coefficients(case.chart, s, v, frames)
    k2 = jacobi_ode_coefficients(case.chart, s, 2.0 * v, frames)
    assert np.abs(k2 - 4.0 * k1).max() < 1e-8 * np.abs(k2).max()


def test_jacobi_coefficients_symmetric():
    case = make_case("sphere-theta", 64)
    s, v, frames = edge_frame(case, "E2")
    k_mat = jacobi_ode_coefficients(case.chart, s, v, frames)
    assert np.abs(k_mat - np.swapaxes(k_mat, 1, 2)).max() < 1e-8


# -- the shooting system -----------------------------------------------------

def test_system_dimensions_honeycomb():
    case = make_case("honeycomb-torus", 64)
    sysm = assemble_jacobi_system(case.chart, case.net)
    assert sysm.matrix.shape == (10, 10)


def test_equator_monodromy_is_identity():
    case = make_case("sphere-equator", 64)
    sysm = assemble_jacobi_system(case.chart, case.net)
    # the system matrix is monodromy minus identity
    assert np.abs(sysm.matrix).max() < 1e-6


def test_system_curvature_block_scales_with_radius():
    import geodesicnets.cases as cases_mod
    from geodesicnets.geometry import StereographicSphereChart
    from geodesicnets.net import GeodesicNet, edge_lengths
    from geodesicnets.multigraph import WeightedMultigraph

    mono = {}
    for radius in (1.0, 2.0):
        chart = StereographicSphereChart(radius=radius)
        graph = WeightedMultigraph.build(["V"], [("E", "V", "V", 1)])
        t = np.linspace(0, 1, 129)
        samples = radius * np.stack([np.cos(2 * np.pi * t), np.sin(2 * np.pi * t)], axis=1)
        samples[-1] = samples[0]
        net = GeodesicNet(graph=graph, edge_samples={"E": samples},
                          vertex_positions={"V": samples[0]},
                          periodic_edges=frozenset({"E"}), constant_speed=True)
        net.lengths = edge_lengths(chart, net)
        s = net.edge_samples["E"]
        v = st.velocity(s, loop_shift=net.loop_shift("E"))
        frames = parallel_frame(chart, s, v, loop_shift=net.loop_shift("E"))
        k_mat = jacobi_ode_coefficients(chart, s, v, frames)
        mono[radius] = float(k_mat[:, 0, 0].mean()) / net.lengths["E"] ** 2
    # sectional curvature scales with 1/r^2
    assert abs(mono[1.0] / mono[2.0] - 4.0) < 1e-3


def test_kernel_dimensions_all_nets():
    expected = {"honeycomb-torus": 2, "sphere-equator": 2, "sphere-theta": 3}
    for name, dim in expected.items():
        case = make_case(name, 64)
        ker = jacobi_kernel(case.chart, case.net)
        assert ker.dimension == dim, name
        assert ker.gap >= 10.0


def test_honeycomb_kernel_spans_translations():
    case = make_case("honeycomb-torus", 64)
    ker = jacobi_kernel(case.chart, case.net)
    # translation fields: constant equal vectors on every edge
    basis = []
    for fld in ker.ambient:
        stacked = np.concatenate([fld.edge_values[e.id] for e in case.net.graph.edges])
        basis.append(stacked.ravel())
    t_fields = []
    for comp in range(2):
        vec = np.zeros(2)
        vec[comp] = 1.0
        t_fields.append(np.tile(vec, (3 * 65, 1)).ravel())
    q_mat, _ = np.linalg.qr(np.stack(t_fields, axis=1))
    for vec in basis:
        proj = q_mat @ (q_mat.T @ vec)
        assert np.linalg.norm(proj) / np.linalg.norm(vec) > 0.999


def test_equator_kernel_profiles():
    case = make_case("sphere-equator", 64)
    ker = jacobi_kernel(case.chart, case.net)
    t = np.linspace(0, 1, 65)
    basis = np.stack([np.sin(2 * np.pi * t), np.cos(2 * np.pi * t)], axis=1)
    q_mat, _ = np.linalg.qr(basis)
    for red in ker.basis:
        prof = red.u["E"][:, 0]
        proj = q_mat @ (q_mat.T @ prof)
        assert np.linalg.norm(proj) / np.linalg.norm(prof) > 0.999


def test_kernel_elements_annihilate_hessian(rng):
    case = make_case("sphere-equator", 256)
    ker = jacobi_kernel(case.chart, case.net)
    for j_fld in ker.ambient:
        for _ in range(25):
            x_fld = random_reduced_field(case.chart, case.net, rng)
            val = hessian_form(case.chart, case.net, x_fld, j_fld)
            assert abs(val) <= 1e-5


# -- classification ----------------------------------------------------------

def test_classify_field_tangential():
    case = make_case("flat-loop", 64)
    s = case.net.edge_samples["E"]
    v = st.velocity(s, loop_shift=case.net.loop_shift("E"))
    fld = NetField({"E": 0.3 * v})
    kind, tang, normal = classify_field(case.chart, case.net, fld)
    assert kind == "tangential"
    assert np.abs(tang.profiles["E"] - 0.3).max() < 1e-10


def test_classify_field_translation_non_tangential():
    case = make_case("honeycomb-torus", 64)
    fld = NetField({e.id: np.tile([1.0, 0.0], (65, 1)) for e in case.net.graph.edges})
    kind, _, _ = classify_field(case.chart, case.net, fld)
    assert kind == "non-tangential"


def test_classify_field_normal_profile():
    case = make_case("sphere-equator", 64)
    s, v, frames = edge_frame(case, "E")
    t = np.linspace(0, 1, 65)
    fld = NetField({"E": np.sin(2 * np.pi * t)[:, None] * frames[:, 0, :]})
    kind, _, _ = classify_field(case.chart, case.net, fld)
    assert kind == "non-tangential"


# -- verdicts ----------------------------------------------------------------

def test_degenerate_verdicts():
    for name, dim in [("honeycomb-torus", 2), ("sphere-equator", 2), ("sphere-theta", 3)]:
        case = make_case(name, 64)
        verdict = is_nondegenerate(case.chart, case.net)
        assert not verdict.nondegenerate
        assert verdict.kernel_dimension == dim


def test_not_good_graph_rejected():
    from geodesicnets.multigraph import WeightedMultigraph
    from geodesicnets.net import GeodesicNet
    from geodesicnets.cases import HEX_LATTICE
    from geodesicnets.geometry import FlatTorusChart

    chart = FlatTorusChart(HEX_LATTICE)
    graph = WeightedMultigraph.build(["V", "M"], [("E1", "V", "M"), ("E2", "M", "V")])
    lam = HEX_LATTICE[0]
    t = np.linspace(0, 1, 65)[:, None]
    net = GeodesicNet(
        graph=graph,
        edge_samples={"E1": t * 0.5 * lam, "E2": 0.5 * lam + t * 0.5 * lam},
        vertex_positions={"V": np.zeros(2), "M": 0.5 * lam},
    )
    with pytest.raises(ValueError):
        is_nondegenerate(chart, net)


# -- reduced FD hessian oracle -----------------------------------------------

def test_reduced_fd_matches_shooting_dimensions():
    expected = {"honeycomb-torus": 2, "sphere-equator": 2, "sphere-theta": 3}
    for name, dim in expected.items():
        case = make_case(name, 64)
        h_mat, labels = reduced_hessian_fd(case.chart, case.net)
        fd_dim, svals, gap = reduced_kernel_dimension(h_mat)
        assert fd_dim == dim, name
        assert gap >= 10.0
        assert np.abs(h_mat - h_mat.T).max() <= 1e-8 * np.abs(h_mat).max()


def test_reduced_fd_equator_eigenvectors(rng):
    case = make_case("sphere-equator", 64)
    h_mat, labels = reduced_hessian_fd(case.chart, case.net)
    w, vecs = np.linalg.eigh(h_mat)
    idx = np.argsort(np.abs(w))[:2]
    t = np.arange(64) / 64
    basis = np.stack([np.sin(2 * np.pi * t), np.cos(2 * np.pi * t)], axis=1)
    q_mat, _ = np.linalg.qr(basis)
    for i in idx:
        vec = vecs[:, i]
        proj = q_mat @ (q_mat.T @ vec)
        assert np.linalg.norm(proj) / np.linalg.norm(vec) > 0.999


def test_reduced_fd_modes_agree():
    case = make_case("sphere-equator", 16)
    h_g, _ = reduced_hessian_fd(case.chart, case.net, mode="gradient")
    h_l, _ = reduced_hessian_fd(case.chart, case.net, mode="length", step=1e-4)
    assert np.abs(h_g - h_l).max() <= 1e-5 * np.abs(h_g).max()


def test_reduced_fd_invalid_step():
    case = make_case("sphere-equator", 16)
    with pytest.raises(ValueError):
        reduced_hessian_fd(case.chart, case.net, step=0.0)


# -- invariances -------------------------------------------------------------

def test_kernel_invariant_under_constant_scaling():
    for name, dim in [("honeycomb-torus", 2), ("sphere-equator", 2)]:
        case = make_case(name, 64)
        for c in (0.5, 2.0):
            scaled = conformal_family(case.chart, ConstantField(1.0), c**2 - 1.0)
            ker = jacobi_kernel(scaled, case.net)
            assert ker.dimension == dim


def test_kernel_invariant_under_refinement():
    case = make_case("sphere-theta", 64)
    fine = resample(case.chart, case.net, 128)
    assert jacobi_kernel(case.chart, fine).dimension == 3


def test_kernel_invariant_under_multiplicity():
    for mult in (1, 2, 3):
        case = make_case("sphere-equator", 64, multiplicity=mult)
        assert jacobi_kernel(case.chart, case.net).dimension == 2
