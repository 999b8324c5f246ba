# -*- coding: utf-8 -*-
"""
This module builds measurement spaces M(a, b): the unitaries M with a unit eigenvalue satisfying
X^a Z^b M = ω M X^a Z^b. Their eigenbases are the single-qudit measurements allowed on a vertex labelled (a, b).

Every M(a, b) is reached from a fixed reference axis P by conjugation with a special unitary that commutes with
Q = X^a Z^b, so a measurement is described by its label and d - 1 angles.
"""
import functools
import logging
from dataclasses import dataclass
from typing import List, Mapping, Sequence, Tuple

import numpy as np

from zdflow import utils
from zdflow.errors import InvalidLabel, NotInMeasurementSpace, ZeroLabel
from zdflow.gfp import PrimeModulus, inv_mod

logger = logging.getLogger(__name__)

PauliLabel = Tuple[int, int]


def omega(d: int) -> complex:
    return np.exp(2j * np.pi / d)


def _odd(d: int) -> int:
    return PrimeModulus(d).require_odd().d


@functools.lru_cache(maxsize=64)
def _shift(d: int) -> np.ndarray:
    """X|m> = |m+1>"""
    x = np.zeros((d, d), dtype=complex)
    for j in range(d):
        x[(j + 1) % d, j] = 1.0
    return x


@functools.lru_cache(maxsize=64)
def _clock(d: int) -> np.ndarray:
    """Z|m> = ω^m |m>"""
    return np.diag(omega(d) ** np.arange(d))


def pauli_matrix(label: PauliLabel, d: int) -> np.ndarray:
    """
    X^a Z^b in the computational basis.

    :raises: EvenModulus for d = 2.
    """
    d = _odd(d)
    a, b = (int(k) % d for k in label)
    return np.linalg.matrix_power(_shift(d), a) @ np.linalg.matrix_power(_clock(d), b)


def _nonzero(label: PauliLabel, d: int) -> Tuple[int, int]:
    a, b = (int(k) % d for k in label)
    if a == 0 and b == 0:
        raise ZeroLabel(f"Label {tuple(label)} is zero mod {d}.")
    return a, b


def canonical_axis(label: PauliLabel, d: int, shift: int = None) -> PauliLabel:
    """
    Reference axis (c, e) of M(a, b) with symplectic product bc - ea = 1: (0, -1/a) when a != 0, else (1/b, 0),
    moved by shift * (a, b). Every shift in Z_d gives an admissible axis; the default is meas.reference_shift.

    :raises: ZeroLabel.
    """
    a, b = _nonzero(label, d)
    shift = int(shift if shift is not None else utils.get_setting("meas", "reference_shift"))
    if a != 0:
        c, e = 0, (-inv_mod(a, d)) % d
    else:
        c, e = inv_mod(b, d), 0
    return (c + shift * a) % d, (e + shift * b) % d


@functools.lru_cache(maxsize=256)
def _label_eigenbasis(a: int, b: int, d: int) -> np.ndarray:
    """columns k are the eigenvectors of X^a Z^b for eigenvalue ω^k"""
    q = pauli_matrix((a, b), d)
    values, vectors = np.linalg.eig(q)
    ks = np.rint(np.angle(values) / (2 * np.pi / d)).astype(int) % d
    if sorted(ks.tolist()) != list(range(d)):
        raise NotInMeasurementSpace(f"X^{a}Z^{b} does not have the spectrum of a Pauli for d = {d}.")
    basis = np.zeros((d, d), dtype=complex)
    basis[:, ks] = vectors
    # orthonormalise against rounding; column phases are irrelevant to V diag(...) V†
    basis, _ = np.linalg.qr(basis)
    basis.setflags(write=False)
    return basis


@dataclass(frozen=True)
class MeasurementSpec:
    """
    :param label: measurement space (a, b) != (0, 0).
    :param angles: d - 1 phases θ_1..θ_{d-1} in radians.
    :param d: the odd prime.
    """

    label: PauliLabel
    angles: Tuple[float, ...]
    d: int

    def __post_init__(self):
        object.__setattr__(self, "label", _nonzero(self.label, self.d))
        angles = tuple(float(t) for t in self.angles)
        if len(angles) != self.d - 1:
            raise InvalidLabel(f"A measurement over Z_{self.d} needs {self.d - 1} angles, got {len(angles)}.")
        object.__setattr__(self, "angles", angles)

    @classmethod
    def reference(cls, label: PauliLabel, d: int) -> "MeasurementSpec":
        return cls(label, (0.0,) * (d - 1), d)

    def to_json(self) -> dict:
        return {"label": list(self.label), "angles": list(self.angles)}


def parse_spec(data: Mapping, d: int) -> MeasurementSpec:
    """read {"label": [a, b], "angles": [θ1, ...]}; missing angles default to 0"""
    return MeasurementSpec(tuple(data["label"]), tuple(data.get("angles", [0.0] * (d - 1))), d)


def spec_to_json(spec: MeasurementSpec) -> dict:
    return spec.to_json()


def random_spec(label: PauliLabel, d: int, rng: np.random.Generator) -> MeasurementSpec:
    """uniform angles in [0, 2π)"""
    return MeasurementSpec(label, tuple(rng.uniform(0.0, 2 * np.pi, size=d - 1)), d)


def commuting_unitary(label: PauliLabel, phases: Sequence[float], d: int) -> np.ndarray:
    """V diag(e^{iφ}) V† with V the eigenbasis of X^a Z^b"""
    a, b = _nonzero(label, d)
    basis = _label_eigenbasis(a, b, _odd(d))
    return basis @ np.diag(np.exp(1j * np.asarray(phases, dtype=float))) @ basis.conj().T


def random_special_unitary_commuting(label: PauliLabel, d: int, rng: np.random.Generator) -> np.ndarray:
    """random special unitary commuting with X^a Z^b"""
    phases = rng.uniform(0.0, 2 * np.pi, size=d)
    phases[0] = -phases[1:].sum()
    return commuting_unitary(label, phases, d)


def measurement_unitary(spec: MeasurementSpec) -> np.ndarray:
    """
    M = U P U† with P the reference axis and U = V diag(e^{iθ_0}, ..., e^{iθ_{d-1}}) V†, θ_0 = -Σθ_k.

    :raises: EvenModulus, ZeroLabel.
    """
    d = _odd(spec.d)
    theta = np.concatenate([[-sum(spec.angles)], spec.angles])
    u = commuting_unitary(spec.label, theta, d)
    p = pauli_matrix(canonical_axis(spec.label, d), d)
    return u @ p @ u.conj().T


def membership_residual(m: np.ndarray, label: PauliLabel, d: int) -> float:
    """Frobenius norm of Q M - ω M Q"""
    q = pauli_matrix(label, d)
    return float(np.linalg.norm(q @ m - omega(d) * m @ q))


def in_measurement_space(m: np.ndarray, label: PauliLabel, d: int, tolerance: float = None) -> bool:
    tolerance = tolerance if tolerance is not None else utils.get_setting("sim", "tolerance")
    if m.shape != (d, d):
        return False
    unitary_tolerance = utils.get_setting("sim", "unitary_tolerance")
    if np.linalg.norm(m.conj().T @ m - np.eye(d)) > max(unitary_tolerance, tolerance):
        return False
    if membership_residual(m, label, d) > tolerance:
        return False
    return bool(np.linalg.svd(m - np.eye(d), compute_uv=False)[-1] <= tolerance)


def eigenbasis(m: np.ndarray, label: PauliLabel, d: int, tolerance: float = None) -> List[np.ndarray]:
    """
    |0:M> is the fixpoint of M with its first nonzero amplitude real and positive; |m:M> = Q^{-m} |0:M>.

    :return: d orthonormal vectors with M|m:M> = ω^m |m:M>.
    :raises: NotInMeasurementSpace.
    """
    d = _odd(d)
    _nonzero(label, d)
    tolerance = tolerance if tolerance is not None else utils.get_setting("sim", "tolerance")
    if not in_measurement_space(m, label, d, tolerance):
        raise NotInMeasurementSpace(
            f"Matrix is not a fixpoint unitary of M{tuple(label)}: residual {membership_residual(m, label, d):.3e}."
        )
    _, _, vh = np.linalg.svd(m - np.eye(d))
    fixpoint = vh[-1].conj()
    lead = fixpoint[np.flatnonzero(np.abs(fixpoint) > tolerance)[0]]
    fixpoint = fixpoint * (abs(lead) / lead)
    fixpoint = fixpoint / np.linalg.norm(fixpoint)
    q_inverse = pauli_matrix(label, d).conj().T
    basis = [fixpoint]
    for _ in range(1, d):
        basis.append(q_inverse @ basis[-1])
    return basis
