"""Two-qubit states, ±1-valued qubit observables and Born-rule behaviors."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .bell import Behavior

HERMITIAN_TOL = 1e-14
TRACE_TOL = 1e-12
POSITIVITY_TOL = 1e-12
INVOLUTION_TOL = 1e-12

I2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)

PHI_PLUS = np.array([1, 0, 0, 1], dtype=complex) / math.sqrt(2)
PHI_PLUS_PROJECTOR = np.outer(PHI_PLUS, PHI_PLUS.conj())


def _readonly(m) -> np.ndarray:
    out = np.array(m, dtype=complex)
    out.setflags(write=False)
    return out


def check_hermitian(m: np.ndarray, shape: tuple[int, int], what: str = "matrix") -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.shape != shape:
        raise ValueError(f"{what} must have shape {shape}, got {m.shape}")
    if np.abs(m - m.conj().T).max() > HERMITIAN_TOL:
        raise ValueError(f"{what} is not Hermitian")
    return m


def check_density_matrix(rho: np.ndarray) -> np.ndarray:
    rho = check_hermitian(rho, (4, 4), "density matrix")
    if abs(np.trace(rho).real - 1) > TRACE_TOL:
        raise ValueError(f"density matrix has trace {np.trace(rho).real!r}")
    if np.linalg.eigvalsh(rho).min() < -POSITIVITY_TOL:
        raise ValueError("density matrix is not positive semidefinite")
    return rho


def check_observable(obs: np.ndarray) -> np.ndarray:
    obs = check_hermitian(obs, (2, 2), "observable")
    if np.abs(obs @ obs - I2).max() > INVOLUTION_TOL:
        raise ValueError("observable does not square to the identity")
    return obs


def projectors(obs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenprojectors (outcome +1, outcome -1) of an involutive observable."""
    return (I2 + obs) / 2, (I2 - obs) / 2


@dataclass(frozen=True, eq=False)
class QuantumModel:
    state: np.ndarray
    alice_obs: tuple[np.ndarray, np.ndarray]
    bob_obs: tuple[np.ndarray, np.ndarray]

    def __post_init__(self):
        object.__setattr__(self, "state", _readonly(check_density_matrix(self.state)))
        for name in ("alice_obs", "bob_obs"):
            obs = getattr(self, name)
            if len(obs) != 2:
                raise ValueError(f"{name} must hold two observables")
            object.__setattr__(self, name, tuple(_readonly(check_observable(o)) for o in obs))

    def expectation(self, alice_op: np.ndarray = I2, bob_op: np.ndarray = I2) -> complex:
        return complex(np.trace(self.state @ np.kron(alice_op, bob_op)))


def _unit_interval(value: float, name: str) -> float:
    value = float(value)
    if not 0 <= value <= 1:
        raise ValueError(f"{name} must lie in [0, 1], got {value}")
    return value


def white_noise_state(visibility: float) -> np.ndarray:
    v = _unit_interval(visibility, "visibility")
    return v * PHI_PLUS_PROJECTOR + (1 - v) * np.eye(4, dtype=complex) / 4


def dephasing_state(p: float) -> np.ndarray:
    """p |phi+><phi+| + (1 - p) (|00><00| + |11><11|) / 2."""
    p = _unit_interval(p, "p")
    classical = np.diag([1, 0, 0, 1]).astype(complex) / 2
    return p * PHI_PLUS_PROJECTOR + (1 - p) * classical


def paper_settings_white() -> tuple[tuple[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]]:
    """A0 = Z, A1 = X, B_y = (Z + (-1)^y X)/sqrt(2)."""
    r = math.sqrt(2)
    return (SIGMA_Z, SIGMA_X), ((SIGMA_Z + SIGMA_X) / r, (SIGMA_Z - SIGMA_X) / r)


def paper_settings_dephasing(p: float) -> tuple[tuple[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]]:
    """A0 = Z, A1 = X, B_y = cos(chi) Z + (-1)^y sin(chi) X with chi = arctan(p)."""
    p = _unit_interval(p, "p")
    chi = math.atan(p)
    c, s = math.cos(chi), math.sin(chi)
    return (SIGMA_Z, SIGMA_X), (c * SIGMA_Z + s * SIGMA_X, c * SIGMA_Z - s * SIGMA_X)


def white_noise_model(visibility: float) -> QuantumModel:
    alice, bob = paper_settings_white()
    return QuantumModel(white_noise_state(visibility), alice, bob)


def dephasing_model(p: float) -> QuantumModel:
    alice, bob = paper_settings_dephasing(p)
    return QuantumModel(dephasing_state(p), alice, bob)


def noise_model(kind: str, param: float) -> QuantumModel:
    if kind == "white":
        return white_noise_model(param)
    if kind == "dephasing":
        return dephasing_model(param)
    raise ValueError(f"unknown noise kind {kind!r}")


def behavior_from_model(m: QuantumModel) -> Behavior:
    table = np.empty((2, 2, 2, 2))
    for x, y in itertools.product(range(2), repeat=2):
        pa = projectors(m.alice_obs[x])
        pb = projectors(m.bob_obs[y])
        for a, b in itertools.product(range(2), repeat=2):
            table[a, b, x, y] = m.expectation(pa[a], pb[b]).real
    return Behavior(table)
