# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled propagation kernel for the drifting-detuning Monte Carlo path.

Semantics match ``kernels_np.ou_propagate``: per pulse, ``substeps``
free-evolution substeps, the pulse, ``substeps`` further substeps; each
substep uses the drift at its start and then applies the exact
Ornstein-Uhlenbeck update, consuming one normal per substep.
"""

from libc.math cimport cos, sin, sqrt


def ou_propagate(double[:, ::1] q,
                 double[::1] delta_static,
                 double[::1] delta_ou,
                 double[::1] phases,
                 double tau,
                 double eps,
                 int substeps,
                 double a_coef,
                 double b_coef,
                 double[:, ::1] normals,
                 int reps):
    """Advance per-spin propagator quaternions in place.

    ``q`` is (n, 4); ``normals`` is (n, reps * L * 2 * substeps).
    """
    cdef Py_ssize_t n = q.shape[0]
    cdef Py_ssize_t L = phases.shape[0]
    cdef Py_ssize_t i, r, j, s, g
    cdef double dt = tau / (2.0 * substeps)
    cdef double w, x, y, z, d, dou
    cdef double ph, c, gs, nw, nx, ny, nz, pw, px, py, inv
    cdef Py_ssize_t needed = reps * L * 2 * substeps

    if normals.shape[1] != needed or normals.shape[0] != n:
        raise ValueError("normals array has the wrong shape")

    # pulse quaternions (w, x, y, 0) per phase
    cdef double se = sin(0.5 * eps)
    cdef double ce = cos(0.5 * eps)

    with nogil:
        for i in range(n):
            w = q[i, 0]; x = q[i, 1]; y = q[i, 2]; z = q[i, 3]
            d = delta_static[i]
            dou = delta_ou[i]
            g = 0
            for r in range(reps):
                for j in range(L):
                    pw = se
                    px = ce * cos(phases[j])
                    py = ce * sin(phases[j])
                    for s in range(substeps):
                        ph = 0.5 * (d + dou) * dt
                        c = cos(ph); gs = sin(ph)
                        # (c, 0, 0, gs) * (w, x, y, z)
                        nw = c * w - gs * z
                        nx = c * x - gs * y
                        ny = c * y + gs * x
                        nz = c * z + gs * w
                        w = nw; x = nx; y = ny; z = nz
                        dou = a_coef * dou + b_coef * normals[i, g]
                        g += 1
                    # (pw, px, py, 0) * (w, x, y, z)
                    nw = pw * w - px * x - py * y
                    nx = pw * x + px * w + py * z
                    ny = pw * y + py * w - px * z
                    nz = pw * z + px * y - py * x
                    w = nw; x = nx; y = ny; z = nz
                    for s in range(substeps):
                        ph = 0.5 * (d + dou) * dt
                        c = cos(ph); gs = sin(ph)
                        nw = c * w - gs * z
                        nx = c * x - gs * y
                        ny = c * y + gs * x
                        nz = c * z + gs * w
                        w = nw; x = nx; y = ny; z = nz
                        dou = a_coef * dou + b_coef * normals[i, g]
                        g += 1
                inv = 1.0 / sqrt(w * w + x * x + y * y + z * z)
                w *= inv; x *= inv; y *= inv; z *= inv
            q[i, 0] = w; q[i, 1] = x; q[i, 2] = y; q[i, 3] = z
            delta_ou[i] = dou
