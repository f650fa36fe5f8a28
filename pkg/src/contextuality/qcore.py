"""Complex linear algebra on the 4-dimensional spin (x) path space.

Basis convention, shared by every module: index = 2*spin + path with
spin up=0, down=1 and path I=0, II=1, i.e. the ordered basis
|up,I>, |up,II>, |down,I>, |down,II>.  The spin factor is always the left
Kronecker factor.
"""

from __future__ import annotations

import numpy as np

from contextuality.errors import InvalidInputError, NotInvolutionError

STRUCT_TOL = 1e-12
NUMERIC_TOL = 1e-10

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
I4 = np.eye(4, dtype=complex)

for _m in (I2, SX, SY, SZ, I4):
    _m.setflags(write=False)


def _square(m, name="matrix"):
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] not in (2, 4):
        raise InvalidInputError(f"{name} must be a 2x2 or 4x4 matrix, got shape {m.shape}")
    return m


def tensor(a, b) -> np.ndarray:
    """Kronecker product ``a (x) b`` of two 2x2 matrices, spin factor first."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != (2, 2) or b.shape != (2, 2):
        raise InvalidInputError(f"tensor expects two 2x2 matrices, got {a.shape} and {b.shape}")
    return np.kron(a, b)


def max_abs_diff(a, b) -> float:
    """Chebyshev distance between two arrays of equal shape."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise InvalidInputError(f"shape mismatch: {a.shape} vs {b.shape}")
    if a.size == 0:
        return 0.0
    return float(np.max(np.abs(a - b)))


def allclose(a, b, tol: float = STRUCT_TOL) -> bool:
    return max_abs_diff(a, b) <= tol


def commutes(a, b, tol: float = STRUCT_TOL) -> bool:
    """True iff every entry of ``ab - ba`` has magnitude at most ``tol``."""
    a = _square(a, "a")
    b = _square(b, "b")
    if a.shape != b.shape:
        raise InvalidInputError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return max_abs_diff(a @ b, b @ a) <= tol


def is_hermitian(m, tol: float = STRUCT_TOL) -> bool:
    m = _square(m)
    return max_abs_diff(m, m.conj().T) <= tol


def is_unitary(u, tol: float = STRUCT_TOL) -> bool:
    u = _square(u)
    return max_abs_diff(u.conj().T @ u, np.eye(u.shape[0])) <= tol


def eigenprojectors(o, tol: float = NUMERIC_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Projectors onto the +1 and -1 eigenspaces of a Hermitian involution.

    ``o`` may be a raw matrix or anything with a ``matrix`` attribute
    (an :class:`~contextuality.pmsquare.Observable`).
    """
    m = _square(getattr(o, "matrix", o), "observable")
    if not is_hermitian(m, tol):
        raise InvalidInputError("observable is not Hermitian")
    ident = np.eye(m.shape[0], dtype=complex)
    if max_abs_diff(m @ m, ident) > tol:
        raise NotInvolutionError("observable does not square to the identity")
    return (ident + m) / 2, (ident - m) / 2


def bloch_operator(direction) -> np.ndarray:
    """``n . sigma`` for a real 3-vector ``n`` (not normalised here)."""
    nx, ny, nz = np.asarray(direction, dtype=float)
    return nx * SX + ny * SY + nz * SZ


def rotation(axis, angle: float) -> np.ndarray:
    """SU(2) rotation ``exp(-i angle/2 n.sigma)`` about the unit vector ``axis``."""
    n = np.asarray(axis, dtype=float)
    norm = np.linalg.norm(n)
    if n.shape != (3,) or abs(norm - 1.0) > NUMERIC_TOL:
        raise InvalidInputError("rotation axis must be a unit 3-vector")
    return np.cos(angle / 2) * I2 - 1j * np.sin(angle / 2) * bloch_operator(n)


def normalize_vector(v) -> np.ndarray:
    v = np.asarray(v, dtype=complex).reshape(-1)
    nrm = np.linalg.norm(v)
    if nrm == 0:
        raise InvalidInputError("cannot normalise the zero vector")
    return v / nrm


def fix_global_phase(v, tol: float = NUMERIC_TOL) -> np.ndarray:
    """Rotate the global phase so the first non-negligible amplitude is real positive."""
    v = np.asarray(v, dtype=complex)
    for amp in v:
        if abs(amp) > tol:
            return v * (abs(amp) / amp)
    return v


def as_density(state, tol: float = STRUCT_TOL) -> np.ndarray:
    """Validate a pure state vector or density matrix and return a density matrix.

    Vectors must have unit norm within ``tol``; matrices must be Hermitian
    with unit trace (within ``tol``) and no eigenvalue below -1e-10.
    """
    s = np.asarray(state, dtype=complex)
    if s.shape == (4,):
        if abs(np.linalg.norm(s) - 1.0) > tol:
            raise InvalidInputError("state vector is not normalised")
        return np.outer(s, s.conj())
    if s.shape != (4, 4):
        raise InvalidInputError(f"state must be a length-4 vector or 4x4 matrix, got {s.shape}")
    if not is_hermitian(s, tol):
        raise InvalidInputError("density matrix is not Hermitian")
    if abs(np.trace(s) - 1.0) > tol:
        raise InvalidInputError("density matrix does not have unit trace")
    if np.min(np.linalg.eigvalsh(s)) < -NUMERIC_TOL:
        raise InvalidInputError("density matrix is not positive semidefinite")
    return s


def expectation(rho, op) -> float:
    """``Re tr(rho op)``; the imaginary part vanishes for Hermitian ``op``."""
    return float(np.real(np.trace(np.asarray(rho) @ np.asarray(op))))


def random_pure_state(rng: np.random.Generator) -> np.ndarray:
    """Haar-random normalised 4-vector."""
    v = rng.normal(size=4) + 1j * rng.normal(size=4)
    return v / np.linalg.norm(v)


def maximally_mixed() -> np.ndarray:
    return I4 / 4


def perturb_direction(direction, half_angle: float, rng, n: int) -> np.ndarray:
    """``n`` unit vectors drawn uniformly from the cone of ``half_angle`` about ``direction``.

    ``rng`` is anything with ``uniform(size)`` (a RandomSource or numpy Generator
    wrapper).  Returns shape (n, 3).
    """
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    # orthonormal frame (d, e1, e2)
    helper = np.array([1.0, 0.0, 0.0]) if abs(d[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = np.cross(d, helper)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(d, e1)
    u = rng.uniform((n, 2))
    cos_a = 1.0 - u[:, 0] * (1.0 - np.cos(half_angle))
    sin_a = np.sqrt(np.clip(1.0 - cos_a**2, 0.0, None))
    phi = 2 * np.pi * u[:, 1]
    return (cos_a[:, None] * d + (sin_a * np.cos(phi))[:, None] * e1
            + (sin_a * np.sin(phi))[:, None] * e2)
