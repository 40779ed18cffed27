"""Hot loops for the long scans: fixed-step state integration and frame
transport.  Compiled with numba when available; the plain-Python fallback is
identical code, just slow."""

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True

    def _jit(func):
        return njit(cache=True)(func)
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    HAVE_NUMBA = False

    def _jit(func):
        return func


@_jit
def rk4_tripod(omega0, kl, cos_xi, fixed, scan_axis, r0, v, dt, n_steps, stride, psi0):
    """Classic 4th-order fixed-step run of i dpsi/dt = H(R(t)) psi for the
    4-level tripod, R(t) = r0 + v t on the scan axis (0 = x, 1 = z).

    Returns (samples, max_norm_drift); samples include the initial state and
    then every ``stride``-th step.
    """
    sin_xi = np.sqrt(1.0 - cos_xi * cos_xi)
    w12 = omega0 * sin_xi / np.sqrt(2.0)
    w3 = omega0 * cos_xi
    n_samples = n_steps // stride + 1
    out = np.empty((n_samples, 4), np.complex128)
    psi = psi0.astype(np.complex128).copy()
    h = np.zeros((4, 4), np.complex128)
    k1 = np.empty(4, np.complex128)
    k2 = np.empty(4, np.complex128)
    k3 = np.empty(4, np.complex128)
    k4 = np.empty(4, np.complex128)
    tmp = np.empty(4, np.complex128)
    out[0] = psi
    si = 1
    max_drift = 0.0
    for step in range(n_steps):
        t = step * dt
        # three Hamiltonian builds per step: t, t + dt/2, t + dt
        for node in range(3):
            tt = t + 0.5 * dt * node
            r = r0 + v * tt
            if scan_axis == 1:
                x = fixed
                z = r
            else:
                x = r
                z = fixed
            e1 = np.exp(-1j * kl * x)
            e3 = np.exp(1j * kl * z)
            h[0, 1] = w12 * e1
            h[1, 0] = np.conj(h[0, 1])
            h[0, 2] = w12 * np.conj(e1)
            h[2, 0] = np.conj(h[0, 2])
            h[0, 3] = w3 * e3
            h[3, 0] = np.conj(h[0, 3])
            if node == 0:
                for i in range(4):
                    acc = 0j
                    for j in range(4):
                        acc += h[i, j] * psi[j]
                    k1[i] = -1j * acc
                for i in range(4):
                    tmp[i] = psi[i] + 0.5 * dt * k1[i]
            elif node == 1:
                for i in range(4):
                    acc = 0j
                    for j in range(4):
                        acc += h[i, j] * tmp[j]
                    k2[i] = -1j * acc
                for i in range(4):
                    tmp[i] = psi[i] + 0.5 * dt * k2[i]
                for i in range(4):
                    acc = 0j
                    for j in range(4):
                        acc += h[i, j] * tmp[j]
                    k3[i] = -1j * acc
                for i in range(4):
                    tmp[i] = psi[i] + dt * k3[i]
            else:
                for i in range(4):
                    acc = 0j
                    for j in range(4):
                        acc += h[i, j] * tmp[j]
                    k4[i] = -1j * acc
        for i in range(4):
            psi[i] = psi[i] + dt / 6.0 * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i])
        if (step + 1) % stride == 0:
            out[si] = psi
            si += 1
            nrm = 0.0
            for i in range(4):
                nrm += psi[i].real ** 2 + psi[i].imag ** 2
            drift = abs(np.sqrt(nrm) - 1.0)
            if drift > max_drift:
                max_drift = drift
    return out, max_drift


@_jit
def _polar(m):
    """Unitary polar factor and smallest singular value of a small matrix."""
    u, s, vh = np.linalg.svd(m)
    return u @ vh, s.min()


@_jit
def _connection(g, wp, wm, hr):
    """Anti-Hermitian frame connection at an anchor frame F = V g, probed by
    symmetric continuation to R +- hr (overlap blocks wp, wm)."""
    fp, sp = _polar(wp @ g)
    fm, sm = _polar(wm @ g)
    raw = (g.conj().T @ (wp.conj().T @ fp - wm.conj().T @ fm)) / (2.0 * hr)
    asym = 0.0
    k = raw.shape[0]
    a = np.empty((k, k), np.complex128)
    for i in range(k):
        for j in range(k):
            sym = 0.5 * (raw[i, j] + np.conj(raw[j, i]))
            if abs(sym) > asym:
                asym = abs(sym)
            a[i, j] = 0.5 * (raw[i, j] - np.conj(raw[j, i]))
    return a, asym, min(sp, sm)


@_jit
def wz_transport(w_adv, w_half, w_main_p, w_main_m, w_half_p, w_half_m,
                 g0, c0, h_steps, hr):
    """Parallel-transport sweep over a node grid.

    Frames advance by symmetric orthonormalization (F_{j+1} from the overlap
    block w_adv[j]); the coefficient vector integrates dc/dR = -A(R) c with
    classic RK4, the connection A evaluated at nodes and half nodes from the
    probe overlap blocks.  Everything is expressed in the per-node eigenbasis,
    so only k x k blocks move through the loop.

    Returns (g_all, c_all, max_asym, max_drift, min_singular).
    """
    n = w_adv.shape[0]
    k = g0.shape[0]
    g_all = np.empty((n + 1, k, k), np.complex128)
    c_all = np.empty((n + 1, k), np.complex128)
    g = g0.copy()
    c = c0.astype(np.complex128).copy()
    g_all[0] = g
    c_all[0] = c
    max_drift = 0.0
    smin_all = 1.0
    a_node, max_asym, smin = _connection(g, w_main_p[0], w_main_m[0], hr)
    if smin < smin_all:
        smin_all = smin
    for j in range(n):
        g_half, s1 = _polar(w_half[j] @ g)
        a_half, asym, s2 = _connection(g_half, w_half_p[j], w_half_m[j], hr)
        if asym > max_asym:
            max_asym = asym
        g_next, s3 = _polar(w_adv[j] @ g)
        a_next, asym, s4 = _connection(g_next, w_main_p[j + 1], w_main_m[j + 1], hr)
        if asym > max_asym:
            max_asym = asym
        smin = min(min(s1, s2), min(s3, s4))
        if smin < smin_all:
            smin_all = smin
        h = h_steps[j]
        k1 = -(a_node @ c)
        k2 = -(a_half @ (c + 0.5 * h * k1))
        k3 = -(a_half @ (c + 0.5 * h * k2))
        k4 = -(a_next @ (c + h * k3))
        c = c + (h / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
        g = g_next
        a_node = a_next
        g_all[j + 1] = g
        c_all[j + 1] = c
        drift = abs(np.linalg.norm(c) - 1.0)
        if drift > max_drift:
            max_drift = drift
    return g_all, c_all, max_asym, max_drift, smin_all
