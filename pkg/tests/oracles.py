"""Independent oracles: curvature of a radial Kähler metric in C^n coordinates.

The metric is g_{i jbar} = d_i dbar_j P with P' = u(s), s = log|z|^2.
Curvature uses R_{i jbar k lbar} = -d_k dbar_l g_{i jbar} + g^{p qbar} d_k g_{i qbar} dbar_l g_{p jbar}
with all derivatives taken by real central differences.
"""

import numpy as np


def hermitian_metric(u, du, x, n):
    z = x[:n] + 1j * x[n:]
    r = float(np.sum(np.abs(z) ** 2))
    s = np.log(r)
    a, b = u(s), du(s)
    return (a / r) * np.eye(n) + (b - a) * np.outer(np.conj(z), z) / r**2


def _wirtinger_first(G, x, n, h):
    """d_k G and dbar_k G, arrays indexed [k, i, j]."""
    dx = np.empty((2 * n, n, n), complex)
    for a in range(2 * n):
        e = np.zeros(2 * n)
        e[a] = h
        dx[a] = (-G(x + 2 * e) + 8 * G(x + e) - 8 * G(x - e) + G(x - 2 * e)) / (12 * h)
    return 0.5 * (dx[:n] - 1j * dx[n:]), 0.5 * (dx[:n] + 1j * dx[n:])


def _mixed(G, x, n, h):
    """d_k dbar_l G, indexed [k, l, i, j]."""
    H = np.empty((2 * n, 2 * n, n, n), complex)
    for a in range(2 * n):
        for b in range(a, 2 * n):
            ea, eb = np.zeros(2 * n), np.zeros(2 * n)
            ea[a], eb[b] = h, h
            H[a, b] = (G(x + ea + eb) - G(x + ea - eb) - G(x - ea + eb) + G(x - ea - eb)) / (4 * h * h)
            H[b, a] = H[a, b]
    xs, ys = slice(0, n), slice(n, 2 * n)
    return 0.25 * (H[xs, xs] + H[ys, ys] + 1j * (H[xs, ys] - H[ys, xs]))


def riemann(u, du, s0, n, h=1e-4, seed=0):
    """(R in a unitary frame [a,b,c,d], radial eigenvalue, spherical eigenvalue) at |z|^2 = e^s0."""
    rng = np.random.default_rng(seed)
    z = rng.normal(size=n) + 1j * rng.normal(size=n)
    z *= np.exp(s0 / 2) / np.linalg.norm(z)
    x = np.concatenate([z.real, z.imag])

    def G(y):
        return hermitian_metric(u, du, y, n)

    M = G(x)
    dk, dl = _wirtinger_first(G, x, n, h)
    ddg = _mixed(G, x, n, h)
    gi = np.linalg.inv(M).T  # gi[p, q] = g^{p qbar}
    R = -np.einsum("klij->ijkl", ddg) + np.einsum("pq,kiq,lpj->ijkl", gi, dk, dl)
    # unitary frame: w^H M w = 1 with w = conj(v); radial direction first
    w_rad = np.conj(z) / np.linalg.norm(z)
    Q, _ = np.linalg.qr(np.column_stack([w_rad, rng.normal(size=(n, n - 1)) + 1j * rng.normal(size=(n, n - 1))]))
    Q[:, 0] = w_rad
    lam = np.real(np.einsum("ia,ij,ja->a", np.conj(Q), M, Q))
    V = np.conj(Q) / np.sqrt(lam)
    Rf = np.einsum("ijkl,ia,jb,kc,ld->abcd", R, V, np.conj(V), V, np.conj(V))
    return Rf, lam[0], lam[1] if n > 1 else None


def rm_norm(Rf):
    return float(np.sqrt(np.sum(np.abs(Rf) ** 2)))
