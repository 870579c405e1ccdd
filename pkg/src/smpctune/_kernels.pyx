# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled Q-learning episode loop, bit-compatible with ``_pykernels``."""
from libc.math cimport exp


def run_episodes(double[:, ::1] q, const long long[:, ::1] next_state, const double[::1] reward,
                 const long long[::1] starts, const double[:, ::1] explore_u,
                 const long long[:, ::1] rand_action, const double[::1] eps,
                 const double[::1] alpha, double gamma, bint softmax, double tau,
                 double[::1] cum_reward, long long[::1] final_state, long long[::1] visits):
    cdef Py_ssize_t n_ep = starts.shape[0]
    cdef Py_ssize_t horizon = explore_u.shape[1]
    cdef Py_ssize_t n_actions = q.shape[1]
    cdef Py_ssize_t e, t, i, a
    cdef long long s, s2
    cdef double a_e, u, r, best, m, z, thr, acc, total, nxt
    cdef double w[64]

    if n_actions > 64:
        raise ValueError("at most 64 actions supported")

    for e in range(n_ep):
        a_e = alpha[e]
        s = starts[e]
        total = 0.0
        visits[s] += 1
        for t in range(horizon):
            u = explore_u[e, t]
            if softmax:
                m = q[s, 0]
                for i in range(1, n_actions):
                    if q[s, i] > m:
                        m = q[s, i]
                z = 0.0
                for i in range(n_actions):
                    w[i] = exp((q[s, i] - m) / tau)
                    z += w[i]
                thr = u * z
                acc = 0.0
                a = n_actions - 1
                for i in range(n_actions):
                    acc += w[i]
                    if thr < acc:
                        a = i
                        break
            elif u < eps[e]:
                a = rand_action[e, t]
            else:
                a = 0
                best = q[s, 0]
                for i in range(n_actions):
                    if q[s, i] > best:
                        best = q[s, i]
                        a = i
            s2 = next_state[s, a]
            r = reward[s2]
            nxt = q[s2, 0]
            for i in range(1, n_actions):
                if q[s2, i] > nxt:
                    nxt = q[s2, i]
            q[s, a] = (1.0 - a_e) * q[s, a] + a_e * (r + gamma * nxt)
            total += r
            s = s2
            visits[s] += 1
        cum_reward[e] = total
        final_state[e] = s
