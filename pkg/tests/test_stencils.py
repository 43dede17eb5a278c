import numpy as np

from geodesicnets import stencils as st


def test_sbp_pair_identity_exact():
    n, h = 41, 1.0 / 40
    d_mat, w = st.sbp42(n, h)
    q = np.diag(w) @ d_mat
    b = q + q.T
    expect = np.zeros((n, n))
    expect[0, 0] = -1.0
    expect[-1, -1] = 1.0
    assert np.abs(b - expect).max() < 1e-14


def test_quadrature_weights_sum():
    w = st.quadrature_weights(65, 1 / 64)
    assert abs(w.sum() - 1.0) < 1e-14
    wl = st.quadrature_weights(65, 1 / 64, loop=True)
    assert abs(wl.sum() - 1.0) < 1e-14


def test_derivative_exact_on_quadratics_and_interior_cubics():
    n = 33
    t = np.linspace(0, 1, n)
    d_mat, _ = st.sbp42(n, 1 / (n - 1))
    f2 = 3 * t**2 - t + 0.5
    assert np.abs(d_mat @ f2 - (6 * t - 1)).max() < 1e-11
    f3 = 2 * t**3 - t**2 + 0.5 * t - 1
    df3 = 6 * t**2 - 2 * t + 0.5
    assert np.abs((d_mat @ f3 - df3)[4:-4]).max() < 1e-11


def test_periodic_velocity_order():
    errs = []
    for n in (32, 64):
        t = np.arange(n + 1) / n
        c = np.stack([np.cos(2 * np.pi * t), np.sin(2 * np.pi * t)], axis=1)
        v = st.velocity(c, loop_shift=np.zeros(2))
        vt = 2 * np.pi * np.stack([-np.sin(2 * np.pi * t), np.cos(2 * np.pi * t)], axis=1)
        errs.append(np.abs(v - vt).max())
    order = np.log2(errs[0] / errs[1])
    assert order > 3.7


def test_velocity_ho_endpoint_accuracy():
    n = 65
    t = np.linspace(0, 1, n)
    f = np.sin(2.0 * t + 0.3)
    v = st.velocity_ho(f)
    assert abs(v[0] - 2.0 * np.cos(0.3)) < 1e-8
    assert abs(v[-1] - 2.0 * np.cos(2.3)) < 1e-8


def test_second_derivative_smooth():
    n = 65
    t = np.linspace(0, 1, n)
    f = np.cos(3 * t)
    d2 = st.second_derivative(f)
    assert np.abs(d2 + 9 * np.cos(3 * t)).max() < 1e-5


def test_endpoint_first_derivative_matches():
    t = np.linspace(0, 1, 65)
    f = np.exp(0.7 * t)
    assert abs(st.endpoint_first_derivative(f, 0) - 0.7) < 1e-9
    assert abs(st.endpoint_first_derivative(f, 1) - 0.7 * np.exp(0.7)) < 1e-9


def test_upsample_preserves_nodes_and_accuracy():
    t = np.linspace(0, 1, 33)
    c = np.stack([t, np.sin(2 * t)], axis=1)
    fine = st.upsample_curve(c, 4)
    assert np.abs(fine[::4] - c).max() == 0.0
    tf = np.linspace(0, 1, 129)
    assert np.abs(fine[:, 1] - np.sin(2 * tf)).max() < 5e-9


def test_upsample_loop_through_seam():
    n = 32
    t = np.arange(n + 1) / n
    shift = np.array([2.0, 0.0])
    c = np.stack([2 * t, np.sin(2 * np.pi * t)], axis=1)
    fine = st.upsample_curve(c, 4, loop_shift=shift)
    tf = np.arange(4 * n + 1) / (4 * n)
    assert np.abs(fine[:, 1] - np.sin(2 * np.pi * tf)).max() < 1e-6


def test_fornberg_interpolation_weights():
    x = np.arange(6.0)
    w = st.fd_weights(2.5, x, 0)
    f = x**4 - 2 * x + 1
    assert abs(w @ f - (2.5**4 - 2 * 2.5 + 1)) < 1e-10
