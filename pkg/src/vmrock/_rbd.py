"""Compiled rigid-body kernels for revolute trees.

Everything here works on the flat arrays produced by ``ChainDescription.arrays``.
Link 0 is the fixed root. Joints are visited in ``topo`` order so a joint's
parent link is always placed before its child.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def cross(a, b):
    return np.array(
        [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
    )


@njit(cache=True)
def mv(A, x):
    """Small dense matrix-vector product without BLAS dispatch."""
    m, n = A.shape
    out = np.zeros(m)
    for i in range(m):
        acc = 0.0
        for j in range(n):
            acc += A[i, j] * x[j]
        out[i] = acc
    return out


@njit(cache=True)
def mtv(A, x):
    """``A.T @ x`` for small dense ``A``."""
    m, n = A.shape
    out = np.zeros(n)
    for i in range(m):
        xi = x[i]
        for j in range(n):
            out[j] += A[i, j] * xi
    return out


@njit(cache=True)
def mm(A, B):
    m, k = A.shape
    n = B.shape[1]
    out = np.zeros((m, n))
    for i in range(m):
        for l in range(k):
            a = A[i, l]
            for j in range(n):
                out[i, j] += a * B[l, j]
    return out


@njit(cache=True)
def dot(a, b):
    acc = 0.0
    for i in range(a.shape[0]):
        acc += a[i] * b[i]
    return acc


@njit(cache=True)
def solve_spd(M, b):
    """Cholesky solve of a small symmetric positive-definite system.

    Raises ``ValueError`` when a pivot is not positive.
    """
    n = M.shape[0]
    Lc = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1):
            acc = M[i, j]
            for k in range(j):
                acc -= Lc[i, k] * Lc[j, k]
            if i == j:
                if not acc > 0.0:
                    raise ValueError("mass matrix is not positive definite")
                Lc[i, i] = np.sqrt(acc)
            else:
                Lc[i, j] = acc / Lc[j, j]
    y = np.zeros(n)
    for i in range(n):
        acc = b[i]
        for k in range(i):
            acc -= Lc[i, k] * y[k]
        y[i] = acc / Lc[i, i]
    x = np.zeros(n)
    for i in range(n - 1, -1, -1):
        acc = y[i]
        for k in range(i + 1, n):
            acc -= Lc[k, i] * x[k]
        x[i] = acc / Lc[i, i]
    return x


@njit(cache=True)
def axis_rotation(axis, angle):
    """Rotation matrix for ``angle`` about unit ``axis`` (Rodrigues)."""
    x, y, z = axis[0], axis[1], axis[2]
    c = np.cos(angle)
    s = np.sin(angle)
    t = 1.0 - c
    return np.array(
        [
            [t * x * x + c, t * x * y - s * z, t * x * z + s * y],
            [t * x * y + s * z, t * y * y + c, t * y * z - s * x],
            [t * x * z - s * y, t * y * z + s * x, t * z * z + c],
        ]
    )


@njit(cache=True)
def link_poses(q, topo, jp, jc, axis, oR, op, base_R, base_p, n_links):
    """World pose of every link plus world joint axes and joint origins."""
    n = topo.shape[0]
    R = np.empty((n_links, 3, 3))
    p = np.empty((n_links, 3))
    aw = np.empty((n, 3))
    ow = np.empty((n, 3))
    Rj = np.empty((3, 3))
    R[0] = base_R
    p[0] = base_p
    for idx in range(n):
        j = topo[idx]
        par = jp[j]
        c = jc[j]
        for r in range(3):
            acc = p[par, r]
            for m in range(3):
                acc += R[par, r, m] * op[j, m]
                Rj[r, m] = R[par, r, 0] * oR[j, 0, m] + R[par, r, 1] * oR[j, 1, m] + R[par, r, 2] * oR[j, 2, m]
            ow[j, r] = acc
            p[c, r] = acc
        x, y, z = axis[j, 0], axis[j, 1], axis[j, 2]
        for r in range(3):
            aw[j, r] = Rj[r, 0] * x + Rj[r, 1] * y + Rj[r, 2] * z
        cq = np.cos(q[j])
        sq = np.sin(q[j])
        t = 1.0 - cq
        a00 = t * x * x + cq
        a01 = t * x * y - sq * z
        a02 = t * x * z + sq * y
        a10 = t * x * y + sq * z
        a11 = t * y * y + cq
        a12 = t * y * z - sq * x
        a20 = t * x * z - sq * y
        a21 = t * y * z + sq * x
        a22 = t * z * z + cq
        for r in range(3):
            r0, r1, r2 = Rj[r, 0], Rj[r, 1], Rj[r, 2]
            R[c, r, 0] = r0 * a00 + r1 * a10 + r2 * a20
            R[c, r, 1] = r0 * a01 + r1 * a11 + r2 * a21
            R[c, r, 2] = r0 * a02 + r1 * a12 + r2 * a22
    return R, p, aw, ow


@njit(cache=True)
def link_twists(qd, topo, jp, jc, aw, p, n_links):
    """Angular velocity and origin velocity of every link."""
    w = np.zeros((n_links, 3))
    v = np.zeros((n_links, 3))
    for idx in range(topo.shape[0]):
        j = topo[idx]
        par = jp[j]
        c = jc[j]
        w[c] = w[par] + aw[j] * qd[j]
        v[c] = v[par] + cross(w[par], p[c] - p[par])
    return w, v


@njit(cache=True)
def point_jacobian(link, point, supports, aw, ow):
    """3 x n translational Jacobian of a world point rigidly attached to ``link``."""
    n = aw.shape[0]
    J = np.zeros((3, n))
    for j in range(n):
        if supports[j, link]:
            col = cross(aw[j], point - ow[j])
            J[0, j] = col[0]
            J[1, j] = col[1]
            J[2, j] = col[2]
    return J


@njit(cache=True)
def points_kinematics(links, local, R, p, supports, aw, ow, qd):
    """World positions, Jacobians and velocities of link-attached points."""
    k = links.shape[0]
    n = aw.shape[0]
    pos = np.empty((k, 3))
    jac = np.zeros((k, 3, n))
    vel = np.zeros((k, 3))
    for i in range(k):
        l = links[i]
        for r in range(3):
            pos[i, r] = p[l, r] + R[l, r, 0] * local[i, 0] + R[l, r, 1] * local[i, 1] + R[l, r, 2] * local[i, 2]
        for j in range(n):
            if supports[j, l]:
                dx = pos[i, 0] - ow[j, 0]
                dy = pos[i, 1] - ow[j, 1]
                dz = pos[i, 2] - ow[j, 2]
                cx = aw[j, 1] * dz - aw[j, 2] * dy
                cy = aw[j, 2] * dx - aw[j, 0] * dz
                cz = aw[j, 0] * dy - aw[j, 1] * dx
                jac[i, 0, j] = cx
                jac[i, 1, j] = cy
                jac[i, 2, j] = cz
                vel[i, 0] += cx * qd[j]
                vel[i, 1] += cy * qd[j]
                vel[i, 2] += cz * qd[j]
    return pos, jac, vel


@njit(cache=True)
def _world_inertia(Rl, Il, out):
    # out = Rl Il Rl^T
    for r in range(3):
        for m in range(3):
            acc = 0.0
            for u in range(3):
                ru = Rl[r, u]
                for v in range(3):
                    acc += ru * Il[u, v] * Rl[m, v]
            out[r, m] = acc


@njit(cache=True)
def mass_matrix(R, p, aw, ow, supports, mass, com, inertia):
    n = aw.shape[0]
    M = np.zeros((n, n))
    Jv = np.zeros((3, n))
    Iw = np.empty((3, 3))
    IJ = np.empty((3, n))
    for l in range(1, mass.shape[0]):
        c = np.empty(3)
        for r in range(3):
            c[r] = p[l, r] + R[l, r, 0] * com[l, 0] + R[l, r, 1] * com[l, 1] + R[l, r, 2] * com[l, 2]
        for j in range(n):
            if supports[j, l]:
                dx = c[0] - ow[j, 0]
                dy = c[1] - ow[j, 1]
                dz = c[2] - ow[j, 2]
                Jv[0, j] = aw[j, 1] * dz - aw[j, 2] * dy
                Jv[1, j] = aw[j, 2] * dx - aw[j, 0] * dz
                Jv[2, j] = aw[j, 0] * dy - aw[j, 1] * dx
            else:
                Jv[0, j] = 0.0
                Jv[1, j] = 0.0
                Jv[2, j] = 0.0
        _world_inertia(R[l], inertia[l], Iw)
        for r in range(3):
            for j in range(n):
                IJ[r, j] = 0.0
                if supports[j, l]:
                    IJ[r, j] = Iw[r, 0] * aw[j, 0] + Iw[r, 1] * aw[j, 1] + Iw[r, 2] * aw[j, 2]
        m = mass[l]
        for i in range(n):
            si = supports[i, l]
            for j in range(i, n):
                acc = m * (Jv[0, i] * Jv[0, j] + Jv[1, i] * Jv[1, j] + Jv[2, i] * Jv[2, j])
                if si and supports[j, l]:
                    acc += aw[i, 0] * IJ[0, j] + aw[i, 1] * IJ[1, j] + aw[i, 2] * IJ[2, j]
                M[i, j] += acc
    for i in range(n):
        for j in range(i):
            M[i, j] = M[j, i]
    return M


@njit(cache=True)
def bias_terms(qd, gravity, topo, jp, jc, R, p, aw, ow, supports, mass, com, inertia):
    """Velocity-product torque and gravity torque, both on the left-hand side.

    The equations of motion read ``M qdd + coriolis + gravity_tau = tau``.
    """
    n = aw.shape[0]
    L = mass.shape[0]
    w = np.zeros((L, 3))
    al = np.zeros((L, 3))
    a = np.zeros((L, 3))
    for idx in range(topo.shape[0]):
        j = topo[idx]
        par = jp[j]
        c = jc[j]
        wj0, wj1, wj2 = aw[j, 0] * qd[j], aw[j, 1] * qd[j], aw[j, 2] * qd[j]
        w0, w1, w2 = w[par, 0], w[par, 1], w[par, 2]
        w[c, 0] = w0 + wj0
        w[c, 1] = w1 + wj1
        w[c, 2] = w2 + wj2
        al[c, 0] = al[par, 0] + w1 * wj2 - w2 * wj1
        al[c, 1] = al[par, 1] + w2 * wj0 - w0 * wj2
        al[c, 2] = al[par, 2] + w0 * wj1 - w1 * wj0
        r0, r1, r2 = p[c, 0] - p[par, 0], p[c, 1] - p[par, 1], p[c, 2] - p[par, 2]
        # w x (w x r)
        u0, u1, u2 = w1 * r2 - w2 * r1, w2 * r0 - w0 * r2, w0 * r1 - w1 * r0
        ap0, ap1, ap2 = al[par, 0], al[par, 1], al[par, 2]
        a[c, 0] = a[par, 0] + ap1 * r2 - ap2 * r1 + w1 * u2 - w2 * u1
        a[c, 1] = a[par, 1] + ap2 * r0 - ap0 * r2 + w2 * u0 - w0 * u2
        a[c, 2] = a[par, 2] + ap0 * r1 - ap1 * r0 + w0 * u1 - w1 * u0
    cor = np.zeros(n)
    grav = np.zeros(n)
    Iw = np.empty((3, 3))
    for l in range(1, L):
        rc0 = R[l, 0, 0] * com[l, 0] + R[l, 0, 1] * com[l, 1] + R[l, 0, 2] * com[l, 2]
        rc1 = R[l, 1, 0] * com[l, 0] + R[l, 1, 1] * com[l, 1] + R[l, 1, 2] * com[l, 2]
        rc2 = R[l, 2, 0] * com[l, 0] + R[l, 2, 1] * com[l, 1] + R[l, 2, 2] * com[l, 2]
        w0, w1, w2 = w[l, 0], w[l, 1], w[l, 2]
        b0, b1, b2 = al[l, 0], al[l, 1], al[l, 2]
        u0, u1, u2 = w1 * rc2 - w2 * rc1, w2 * rc0 - w0 * rc2, w0 * rc1 - w1 * rc0
        ac0 = a[l, 0] + b1 * rc2 - b2 * rc1 + w1 * u2 - w2 * u1
        ac1 = a[l, 1] + b2 * rc0 - b0 * rc2 + w2 * u0 - w0 * u2
        ac2 = a[l, 2] + b0 * rc1 - b1 * rc0 + w0 * u1 - w1 * u0
        _world_inertia(R[l], inertia[l], Iw)
        iw0 = Iw[0, 0] * w0 + Iw[0, 1] * w1 + Iw[0, 2] * w2
        iw1 = Iw[1, 0] * w0 + Iw[1, 1] * w1 + Iw[1, 2] * w2
        iw2 = Iw[2, 0] * w0 + Iw[2, 1] * w1 + Iw[2, 2] * w2
        t0 = Iw[0, 0] * b0 + Iw[0, 1] * b1 + Iw[0, 2] * b2 + w1 * iw2 - w2 * iw1
        t1 = Iw[1, 0] * b0 + Iw[1, 1] * b1 + Iw[1, 2] * b2 + w2 * iw0 - w0 * iw2
        t2 = Iw[2, 0] * b0 + Iw[2, 1] * b1 + Iw[2, 2] * b2 + w0 * iw1 - w1 * iw0
        c0, c1, c2 = p[l, 0] + rc0, p[l, 1] + rc1, p[l, 2] + rc2
        m = mass[l]
        for j in range(n):
            if supports[j, l]:
                dx, dy, dz = c0 - ow[j, 0], c1 - ow[j, 1], c2 - ow[j, 2]
                jx = aw[j, 1] * dz - aw[j, 2] * dy
                jy = aw[j, 2] * dx - aw[j, 0] * dz
                jz = aw[j, 0] * dy - aw[j, 1] * dx
                cor[j] += m * (jx * ac0 + jy * ac1 + jz * ac2) + aw[j, 0] * t0 + aw[j, 1] * t1 + aw[j, 2] * t2
                grav[j] -= m * (jx * gravity[0] + jy * gravity[1] + jz * gravity[2])
    return cor, grav


@njit(cache=True)
def energies(qd, gravity, topo, jp, jc, R, p, aw, mass, com, inertia):
    """Kinetic energy and gravitational potential (relative to the world origin)."""
    L = mass.shape[0]
    w, v = link_twists(qd, topo, jp, jc, aw, p, L)
    ke = 0.0
    pe = 0.0
    for l in range(1, L):
        rc = mv(R[l], com[l])
        vc = v[l] + cross(w[l], rc)
        Iw = mm(mm(R[l], inertia[l]), R[l].T.copy())
        ke += 0.5 * mass[l] * dot(vc, vc) + 0.5 * dot(w[l], mv(Iw, w[l]))
        pe -= mass[l] * dot(gravity, p[l] + rc)
    return ke, pe
