"""Pure-Python Q-learning episode loop; reference for the compiled kernel.

Both implementations consume identical pre-drawn random arrays and perform
the same floating point operations in the same order, so their outputs
agree bit for bit.
"""
from __future__ import annotations

import math

import numpy as np


def run_episodes(q, next_state, reward, starts, explore_u, rand_action, eps, alpha,
                 gamma, softmax, tau, cum_reward, final_state, visits):
    """Run ``len(starts)`` episodes of tabular Q-learning, updating ``q`` in place.

    Per step ``t`` of episode ``e``: with the softmax policy ``explore_u[e, t]``
    drives inverse-CDF sampling; with epsilon-greedy a random action
    ``rand_action[e, t]`` is taken when ``explore_u[e, t] < eps[e]``,
    otherwise the first maximizing action.
    """
    Q = q.tolist()
    T = next_state.tolist()
    R = reward.tolist()
    U = explore_u.tolist()
    A = rand_action.tolist()
    n_actions = len(Q[0]) if Q else 0
    actions = range(n_actions)
    counts = [0] * len(Q)

    for e, s in enumerate(starts.tolist()):
        a_e = alpha[e]
        eps_e = eps[e]
        u_row = U[e]
        ra_row = A[e]
        total = 0.0
        counts[s] += 1
        for t in range(len(u_row)):
            row = Q[s]
            u = u_row[t]
            if softmax:
                m = max(row)
                w = [math.exp((v - m) / tau) for v in row]
                z = 0.0
                for x in w:
                    z += x
                thr = u * z
                acc = 0.0
                a = n_actions - 1
                for i in actions:
                    acc += w[i]
                    if thr < acc:
                        a = i
                        break
            elif u < eps_e:
                a = ra_row[t]
            else:
                a = 0
                best = row[0]
                for i in actions:
                    if row[i] > best:
                        best = row[i]
                        a = i
            s2 = T[s][a]
            r = R[s2]
            row[a] = (1.0 - a_e) * row[a] + a_e * (r + gamma * max(Q[s2]))
            total += r
            s = s2
            counts[s] += 1
        cum_reward[e] = total
        final_state[e] = s

    q[...] = np.asarray(Q, dtype=np.float64).reshape(q.shape)
    visits += np.asarray(counts, dtype=np.int64)
