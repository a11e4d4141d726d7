"""Named recording gates.

A recording gate acts on (spin, e_a, e_b). Given an orthonormal spin basis
{|up>, |down>}, it toggles e_b when the spin is |up> and toggles e_a when the
spin is |down>:

    U = |up><up| (x) I (x) X  +  |down><down| (x) X (x) I

With the z basis this is the toy-model U_1; with the x or theta-rotated basis
it is U_2.
"""

from __future__ import annotations

import numpy as np

from .statevec import StateVector, apply_local_unitary

_I = np.eye(2, dtype=np.complex128)
_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)


def spin_basis(theta: float) -> tuple[np.ndarray, np.ndarray]:
    """|up>_theta, |down>_theta for a direction rotated by theta from z toward x."""
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([c, s], dtype=np.complex128), np.array([-s, c], dtype=np.complex128)


def recording_unitary(up: np.ndarray, down: np.ndarray) -> np.ndarray:
    up = np.asarray(up, dtype=np.complex128)
    down = np.asarray(down, dtype=np.complex128)
    p_up = np.outer(up, up.conj())
    p_down = np.outer(down, down.conj())
    return np.kron(p_up, np.kron(_I, _X)) + np.kron(p_down, np.kron(_X, _I))


def u1_z() -> np.ndarray:
    return recording_unitary(np.array([1, 0]), np.array([0, 1]))


def u2_x() -> np.ndarray:
    h = 1 / np.sqrt(2)
    return recording_unitary(np.array([h, h]), np.array([h, -h]))


def u2_theta(theta: float) -> np.ndarray:
    return recording_unitary(*spin_basis(theta))


# name -> (constructor, number of float parameters)
CATALOG = {
    "U1_z": (u1_z, 0),
    "U2_x": (u2_x, 0),
    "U2_theta": (u2_theta, 1),
}


def named_gate(name: str, *params: float) -> np.ndarray:
    try:
        ctor, n_params = CATALOG[name]
    except KeyError:
        raise KeyError(f"unknown gate {name!r}; known gates: {sorted(CATALOG)}") from None
    if len(params) != n_params:
        raise ValueError(f"gate {name} takes {n_params} parameter(s), got {len(params)}")
    return ctor(*params)


def embed(parts: list[tuple[np.ndarray, tuple[int, ...]]], targets: tuple[int, ...]) -> np.ndarray:
    """Dense matrix on ``targets`` of the product parts[-1] ... parts[0]."""
    pos = {q: i for i, q in enumerate(targets)}
    dim = 2 ** len(targets)
    cols = []
    for j in range(dim):
        col = np.zeros(dim, dtype=np.complex128)
        col[j] = 1.0
        v = StateVector(col)
        for u, tq in parts:
            v = apply_local_unitary(v, u, [pos[q] for q in tq])
        cols.append(v.amplitudes)
    return np.stack(cols, axis=1)
