"""Dense brute-force oracle: materializes every ordered tuple and permutation."""

import itertools
import math

import numpy as np

from wienerchaos.tensor import BipartiteTensor, SymmetricTensor


def to_dense(t):
    if isinstance(t, SymmetricTensor):
        arr = np.zeros((t.dim,) * t.order)
        for key in itertools.product(range(t.dim), repeat=t.order):
            arr[key] = t[tuple(i + 1 for i in key)]
        return arr
    arr = np.zeros((t.dim,) * t.order)
    p = t.left_order
    for key in itertools.product(range(t.dim), repeat=t.order):
        s = tuple(i + 1 for i in key[:p])
        u = tuple(i + 1 for i in key[p:])
        arr[key] = t[(s, u)]
    return arr


def dense_contract(F, G, r):
    p, q = F.ndim, G.ndim
    return np.tensordot(F, G, axes=(list(range(p - r, p)), list(range(q - r, q))))


def dense_symmetrize(T):
    n = T.ndim
    if n == 0:
        return T.copy()
    acc = np.zeros_like(T)
    for perm in itertools.permutations(range(n)):
        acc += np.transpose(T, perm)
    return acc / math.factorial(n)


def dense_inner(A, B):
    return float(np.sum(A * B))
