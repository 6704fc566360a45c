"""
Dense matrix kernels for coupling blocks and homodyne measurement planning.

All routines are deterministic: singular values are returned in descending
order and every eigen/singular vector is sign-fixed so that its component of
largest magnitude is positive.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
import scipy.linalg

from core.constants import Config
from core.errors import DimensionError, FeedforwardError, InputError

logger = logging.getLogger(__name__)


def _fix_column_signs(V: np.ndarray) -> np.ndarray:
    V = np.array(V, dtype=float, copy=True)
    for j in range(V.shape[1]):
        col = V[:, j]
        if col.size and col[np.argmax(np.abs(col))] < 0:
            V[:, j] = -col
    return V


def is_orthogonal(Q: np.ndarray, tol: float=Config.ORTHO_TOL) -> bool:
    Q = np.asarray(Q, dtype=float)
    if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
        return False
    return bool(np.max(np.abs(Q.T @ Q - np.eye(Q.shape[0])), initial=0.0) < tol)


def is_unitary(U: np.ndarray, tol: float=Config.ORTHO_TOL) -> bool:
    U = np.asarray(U, dtype=complex)
    if U.ndim != 2 or U.shape[0] != U.shape[1]:
        return False
    return bool(np.max(np.abs(U.conj().T @ U - np.eye(U.shape[0])), initial=0.0) < tol)


def svd(K: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Factor K (n' x n) as O'^T Sigma O.

    Returns (O', sigma, O) with O' (n' x n') and O (n x n) orthogonal and
    sigma the min(n', n) singular values in descending order.
    """
    K = np.atleast_2d(np.asarray(K, dtype=float))
    U, sigma, Vh = np.linalg.svd(K, full_matrices=True)
    k = sigma.size
    # pin the sign of each left vector; the matching right vector follows
    for j in range(U.shape[1]):
        col = U[:, j]
        if col.size and col[np.argmax(np.abs(col))] < 0:
            U[:, j] = -col
            if j < k:
                Vh[j, :] = -Vh[j, :]
    for j in range(k, Vh.shape[0]):
        row = Vh[j, :]
        if row.size and row[np.argmax(np.abs(row))] < 0:
            Vh[j, :] = -row
    return (U.T, sigma, Vh)


def sigma_matrix(sigma: np.ndarray, shape: Tuple[int, int]) -> np.ndarray:
    S = np.zeros(shape)
    for i, v in enumerate(sigma):
        S[i, i] = v
    return S


def p_of_k(K: np.ndarray) -> np.ndarray:
    """(I + K^T K)^(-1/2), symmetric positive definite."""
    K = np.atleast_2d(np.asarray(K, dtype=float))
    G = np.eye(K.shape[1]) + K.T @ K
    w, V = scipy.linalg.eigh(G)
    return V @ np.diag(1.0 / np.sqrt(w)) @ V.T


def transmittances(sigma: np.ndarray, n_modes: int) -> Tuple[np.ndarray, np.ndarray]:
    """Per-mode (t, r) with r/t equal to the singular value and t^2 + r^2 = 1.

    Modes beyond the number of singular values pass straight through (t = 1).
    """
    lam = np.zeros(n_modes)
    lam[:len(sigma)] = sigma
    t = 1.0 / np.sqrt(1.0 + lam ** 2)
    return (t, lam * t)


@dataclass
class MeasurePlan:
    """Linear network, homodyne phases and classical postprocessing.

    Mode i is measured at phase theta_i (quadrature p cos(theta) + x sin(theta))
    after the network ``network``; the requested operators are
    ``postprocess @ outcomes``.
    """
    network: np.ndarray
    thetas: np.ndarray
    postprocess: np.ndarray
    phases: Optional[np.ndarray] = None
    kind: str = 'symmetric'
    metadata: dict = field(default_factory=dict)

    def reconstruct(self) -> Tuple[np.ndarray, np.ndarray]:
        """(B, C) such that the plan measures B p + C x."""
        return reconstruct(self)


def reconstruct(plan: MeasurePlan) -> Tuple[np.ndarray, np.ndarray]:
    cos = np.diag(np.cos(plan.thetas))
    sin = np.diag(np.sin(plan.thetas))
    return (plan.postprocess @ cos @ plan.network, plan.postprocess @ sin @ plan.network)


def measure_symmetric(A: np.ndarray) -> MeasurePlan:
    """Plan measuring p + A x for real symmetric A.

    A = O^T diag(tan theta) O; the network is O, mode i is read at theta_i and
    the postprocess is O^T diag(1/cos theta).
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.shape[0] != A.shape[1]:
        raise DimensionError(f'Expected a square matrix, got {A.shape}')
    asym = np.max(np.abs(A - A.T), initial=0.0)
    if asym > Config.SYMMETRY_TOL * max(1.0, np.max(np.abs(A), initial=0.0)):
        raise InputError(f'Matrix is not symmetric (asymmetry {asym:.3e})', 'asymmetric')
    A = (A + A.T) / 2
    w, V = scipy.linalg.eigh(A)
    V = _fix_column_signs(V)
    if np.any(np.abs(w) > Config.FEEDFORWARD_LIMIT):
        raise FeedforwardError(f'Eigenvalue {np.max(np.abs(w)):.3e} exceeds the feedforward limit', 'near_singular', {'eigenvalues': w.tolist()})
    thetas = np.arctan(w)
    O = V.T
    post = O.T @ np.diag(1.0 / np.cos(thetas))
    logger.debug(f'Symmetric measurement plan on {A.shape[0]} modes, thetas={np.round(thetas, 6).tolist()}')
    return MeasurePlan(O, thetas, post, None, 'symmetric')


def _cluster_eigh(S: np.ndarray, tol: float) -> np.ndarray:
    """Real orthogonal O'' diagonalizing the complex symmetric unitary S.

    Diagonalizes Re(S), then Im(S) inside each degenerate eigenspace of Re(S).
    """
    n = S.shape[0]
    w, V = scipy.linalg.eigh(S.real)
    O = np.zeros((n, n))
    start = 0
    while start < n:
        stop = start + 1
        while stop < n and abs(w[stop] - w[start]) < tol:
            stop += 1
        block = V[:, start:stop]
        if stop - start > 1:
            sub = block.T @ S.imag @ block
            _, W = scipy.linalg.eigh((sub + sub.T) / 2)
            block = block @ W
        O[:, start:stop] = block
        start = stop
    return _fix_column_signs(O)


def unitary_ofo(U: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Factor a unitary as O'' diag(Phi) O with O'', O real orthogonal.

    Returns (O'', phi, O) where Phi = exp(i phi) and phi lies in (-pi/2, pi/2].
    """
    U = np.atleast_2d(np.asarray(U, dtype=complex))
    if not is_unitary(U):
        raise InputError('Matrix is not unitary', 'non_unitary')
    S = U @ U.T
    O2 = _cluster_eigh(S, Config.DEGENERACY_TOL)
    phi2 = np.diag(O2.T @ S @ O2)
    phi = np.angle(phi2) / 2
    phi = np.where(phi <= -np.pi / 2, phi + np.pi, phi)
    O_complex = np.diag(np.exp(-1j * phi)) @ O2.T @ U
    if np.max(np.abs(O_complex.imag), initial=0.0) > Config.UNITARY_OFO_TOL:
        raise FeedforwardError('Unitary factorization left a complex residue', 'unitary_ofo', {'residue': float(np.max(np.abs(O_complex.imag)))})
    return (O2, phi, O_complex.real)


def measure_general(B: np.ndarray, C: np.ndarray) -> MeasurePlan:
    """Plan measuring the commuting set q = B p + C x.

    With A = (C - iB)/sqrt(2), commutation means A A^dagger is real. The
    network is a real orthogonal O followed by per-mode phases and homodyne
    angles; the postprocess restores the requested rows.
    """
    B = np.atleast_2d(np.asarray(B, dtype=float))
    C = np.atleast_2d(np.asarray(C, dtype=float))
    if B.shape != C.shape or B.shape[0] != B.shape[1]:
        raise DimensionError(f'B and C must be equal square matrices, got {B.shape} and {C.shape}')
    n = B.shape[0]
    A = (C - 1j * B) / np.sqrt(2)
    G = A @ A.conj().T
    if np.max(np.abs(G.imag), initial=0.0) > Config.ORTHO_TOL * max(1.0, np.max(np.abs(G), initial=0.0)):
        raise InputError('Requested operators do not commute', 'non_commuting', {'imag_norm': float(np.max(np.abs(G.imag)))})
    w, V = scipy.linalg.eigh((G.real + G.real.T) / 2)
    order = np.argsort(-w, kind='stable')
    w = w[order]
    O1 = _fix_column_signs(V[:, order])
    d = np.sqrt(np.clip(w, 0.0, None))
    rank = int(np.sum(d > Config.ORTHO_TOL))
    rows = (O1.T @ A)[:rank] / d[:rank, None]
    if rank < n:
        complement = scipy.linalg.null_space(rows) if rank else np.eye(n, dtype=complex)
        W = np.vstack([rows, complement.conj().T])
    else:
        W = rows
    O2, phi, O = unitary_ofo(W)
    thetas = phi + np.pi / 2
    thetas = np.where(thetas > np.pi / 2, thetas - np.pi, thetas)
    signs = np.where(np.isclose(thetas, phi + np.pi / 2), 1.0, -1.0)
    D = np.diag(np.concatenate([d[:rank], np.zeros(n - rank)]))
    P = O1 @ D @ O2
    post = np.sqrt(2) * P @ np.diag(signs)
    logger.debug(f'General measurement plan on {n} modes with rank {rank}')
    return MeasurePlan(O, thetas, post, phi, 'general', {'rank': rank})


@dataclass(frozen=True)
class TwoModeRotation:
    """Real rotation [[c, -s], [s, c]] acting on (mode_a, mode_b)."""
    mode_a: int
    mode_b: int
    theta: float

    def matrix(self, n: int) -> np.ndarray:
        R = np.eye(n)
        c, s = (np.cos(self.theta), np.sin(self.theta))
        R[self.mode_a, self.mode_a] = c
        R[self.mode_a, self.mode_b] = -s
        R[self.mode_b, self.mode_a] = s
        R[self.mode_b, self.mode_b] = c
        return R


def givens_factor(O: np.ndarray) -> Tuple[List[TwoModeRotation], np.ndarray]:
    """Factor an orthogonal matrix into nearest-neighbour two-mode rotations.

    Returns (rotations, signs) with O = R_1 R_2 ... R_k diag(signs).
    """
    O = np.atleast_2d(np.asarray(O, dtype=float))
    if not is_orthogonal(O):
        raise InputError('Matrix is not orthogonal', 'non_orthogonal')
    n = O.shape[0]
    work = O.copy()
    applied: List[TwoModeRotation] = []
    for col in range(n - 1):
        for row in range(n - 1, col, -1):
            a, b = (work[row - 1, col], work[row, col])
            if abs(b) < 1e-15:
                continue
            theta = np.arctan2(b, a)
            rot = TwoModeRotation(row - 1, row, theta)
            work = rot.matrix(n).T @ work
            applied.append(rot)
    signs = np.sign(np.diag(work))
    signs[signs == 0] = 1.0
    return (applied, signs)


def compose_rotations(rotations: List[TwoModeRotation], signs: np.ndarray) -> np.ndarray:
    n = len(signs)
    M = np.eye(n)
    for rot in rotations:
        M = M @ rot.matrix(n)
    return M @ np.diag(signs)
