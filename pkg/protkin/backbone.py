"""
Backbone-only chain: atoms N, CA, C per residue, atom i placed by the
cumulative product M_i = R_0 R_1 ... R_i applied to the origin.

    i = 3j      (omega_j, C-N)   identity for j = 0
    i = 3j + 1  (phi_j,   N-CA)
    i = 3j + 2  (psi_j,   CA-C)
"""

from enum import Enum
from typing import Sequence

import numpy as np
import numpy.typing as npt
import structlog
from pydantic import BaseModel, ConfigDict

from protkin import batch
from protkin.constants import BACKBONE_ATOMS, C_N, CA_C, N_CA
from protkin.errors import InputError
from protkin.geometry import bond_transform_derivatives, bond_transforms, invert_rigid_batch
from protkin.instrumentation import PASS_DURATION
from protkin.metrics import timed
from protkin.models import AtomicCoordinates, BackboneAngles, BackboneGradient

log = structlog.get_logger(__name__)

DEFAULT_RESIDUE_CODE = "GLY"


class Precision(str, Enum):
    single = "single"
    double = "double"

    def __str__(self) -> str:
        return self.value

    def dtype(self) -> type[np.floating]:
        return np.float32 if self == Precision.single else np.float64


class BackboneSaved(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    transforms: np.ndarray
    coordinates: np.ndarray
    alpha: np.ndarray
    theta: np.ndarray
    precision: Precision

    @property
    def length(self) -> int:
        return len(self.coordinates) // 3


def chain_parameters(
    phi: npt.ArrayLike, psi: npt.ArrayLike, omega: npt.ArrayLike
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Interleaved (alpha, theta, d) of the 3L transforms, in double precision."""
    phi, psi, omega = (np.atleast_1d(np.asarray(a, dtype=np.float64)) for a in (phi, psi, omega))
    n = len(phi)
    if n == 0:
        raise InputError("backbone chain needs at least one residue")
    if len(psi) != n or len(omega) != n:
        raise InputError(f"phi, psi and omega lengths differ: {n}, {len(psi)}, {len(omega)}")
    alpha = np.stack([omega, phi, psi], axis=1).reshape(-1)
    theta = np.tile([C_N.theta, N_CA.theta, CA_C.theta], n)
    d = np.tile([C_N.d, N_CA.d, CA_C.d], n)
    return alpha, theta, d


def _local_transforms(
    alpha: np.ndarray, theta: np.ndarray, d: np.ndarray, dtype: type[np.floating]
) -> np.ndarray:
    local = bond_transforms(alpha, theta, d, dtype=dtype)
    local[0] = np.eye(4, dtype=dtype)
    return local


def bb_forward_item(
    phi: npt.ArrayLike,
    psi: npt.ArrayLike,
    omega: npt.ArrayLike | None = None,
    precision: Precision = Precision.double,
) -> tuple[AtomicCoordinates, BackboneSaved]:
    phi = np.atleast_1d(np.asarray(phi, dtype=np.float64))
    if omega is None:
        omega = np.full(len(phi), np.pi)
    alpha, theta, d = chain_parameters(phi, psi, omega)
    dtype = precision.dtype()
    local = _local_transforms(alpha, theta, d, dtype)
    transforms = np.empty_like(local)
    transforms[0] = local[0]
    for i in range(1, len(local)):
        transforms[i] = transforms[i - 1] @ local[i]
    coordinates = transforms[:, :3, 3].copy()
    for a in (transforms, coordinates):
        a.flags.writeable = False

    n = len(phi)
    coords = AtomicCoordinates(
        positions=coordinates,
        atom_names=list(BACKBONE_ATOMS) * n,
        residue_indices=[j for j in range(n) for _ in BACKBONE_ATOMS],
        residue_codes=[DEFAULT_RESIDUE_CODE] * (3 * n),
    )
    saved = BackboneSaved(
        transforms=transforms,
        coordinates=coordinates,
        alpha=alpha.astype(dtype),
        theta=theta.astype(dtype),
        precision=precision,
    )
    return coords, saved


def bb_backward_item(saved: BackboneSaved, grad_coords: npt.ArrayLike) -> BackboneGradient:
    """
    dL/dphi_j sums over atoms i >= 3j+1 and dL/dpsi_j over i >= 3j+2 of
    (dL/dr_i) . (M_{k-1} dR_k inv(M_k) r_i), k the transform of the angle.
    """
    m = saved.transforms
    n_atoms = len(m)
    grad = np.asarray(grad_coords, dtype=m.dtype)
    if grad.shape != (n_atoms, 3):
        raise InputError(f"gradient shape {grad.shape} does not match {n_atoms} backbone atoms")
    n = n_atoms // 3
    positions = np.concatenate([saved.coordinates, np.ones((n_atoms, 1), dtype=m.dtype)], axis=1)

    # inverses are rebuilt here from the saved cumulative transforms
    k = np.arange(1, n_atoms)
    k = k[k % 3 != 0]
    derivative = bond_transform_derivatives(saved.alpha[k], saved.theta[k], dtype=m.dtype)
    sandwiches = m[k - 1] @ derivative @ invert_rigid_batch(m[k])

    out = np.zeros(n_atoms, dtype=np.float64)
    for idx, atom in enumerate(k.tolist()):
        moved = positions[atom:] @ sandwiches[idx, :3].T
        out[atom] = np.vdot(grad[atom:], moved)
    out = out.reshape(n, 3)
    return BackboneGradient(phi=out[:, 1], psi=out[:, 2])


@timed(PASS_DURATION, op="backbone", phase="forward")
def _forward_item_timed(
    item: tuple[np.ndarray, np.ndarray, np.ndarray], precision: Precision
) -> tuple[AtomicCoordinates, BackboneSaved]:
    return bb_forward_item(*item, precision=precision)


@timed(PASS_DURATION, op="backbone", phase="backward")
def _backward_item_timed(saved: BackboneSaved, grad: npt.ArrayLike) -> BackboneGradient:
    return bb_backward_item(saved, grad)


def _forward(
    angles: BackboneAngles, precision: Precision, threads: int
) -> tuple[list[AtomicCoordinates], list[BackboneSaved]]:
    results = batch.map_items(
        lambda item: _forward_item_timed(item, precision), angles.items(), threads
    )
    return [c for c, _ in results], [s for _, s in results]


def bb_forward(
    angles: BackboneAngles, threads: int = 1
) -> tuple[list[AtomicCoordinates], list[BackboneSaved]]:
    return _forward(angles, Precision.double, threads)


def bb_forward_f32(
    angles: BackboneAngles, threads: int = 1
) -> tuple[list[AtomicCoordinates], list[BackboneSaved]]:
    """Same chain with every factor and product in single precision."""
    return _forward(angles, Precision.single, threads)


def bb_backward(
    saved: Sequence[BackboneSaved], grads: Sequence[npt.ArrayLike], threads: int = 1
) -> list[BackboneGradient]:
    if len(saved) != len(grads):
        raise InputError(f"{len(saved)} saved states for {len(grads)} gradients")
    return batch.map_items(lambda item: _backward_item_timed(*item), zip(saved, grads), threads)


def derivative_by_recomputation(
    phi: npt.ArrayLike, psi: npt.ArrayLike, omega: npt.ArrayLike, residue: int, slot: str
) -> np.ndarray:
    """
    dr_i/dangle for all atoms by differentiating the chain product factor by
    factor, without the saved inverse. Used to cross-check bb_backward.
    """
    alpha, theta, d = chain_parameters(phi, psi, omega)
    offsets = {"phi": 1, "psi": 2}
    if slot not in offsets:
        raise InputError(f"backbone gradients exist for phi and psi only, not {slot}")
    k = 3 * residue + offsets[slot]
    if not 0 < k < len(alpha):
        raise InputError(f"residue {residue} outside a chain of {len(alpha) // 3}")
    local = _local_transforms(alpha, theta, d, np.float64)
    prefix = np.eye(4)
    for i in range(k):
        prefix = prefix @ local[i]
    out = np.zeros((len(alpha), 3))
    acc = prefix @ bond_transform_derivatives(alpha[k], theta[k])
    out[k] = acc[:3, 3]
    for i in range(k + 1, len(alpha)):
        acc = acc @ local[i]
        out[i] = acc[:3, 3]
    return out
