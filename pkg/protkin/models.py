import math
from typing import Any, Sequence

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from protkin.constants import CHI_SLOTS, DIHEDRAL_SLOTS
from protkin.errors import InputError

FloatArray = npt.NDArray[np.float64]


class AtomicCoordinates(BaseModel):
    """Flat (N, 3) positions in angstrom with per-atom metadata."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    positions: np.ndarray
    atom_names: list[str]
    residue_indices: list[int]
    residue_codes: list[str]

    @field_validator("positions", mode="before")
    @classmethod
    def as_points(cls, value: Any) -> np.ndarray:
        arr = np.asarray(value)
        if arr.ndim != 2 or arr.shape[1] != 3:
            raise ValueError(f"positions must have shape (N, 3), got {arr.shape}")
        return arr

    @model_validator(mode="after")
    def check_lengths(self) -> "AtomicCoordinates":
        n = len(self.positions)
        if not len(self.atom_names) == len(self.residue_indices) == len(self.residue_codes) == n:
            raise ValueError("atom metadata does not match the number of positions")
        return self

    def __len__(self) -> int:
        return len(self.positions)

    @staticmethod
    def from_points(points: npt.ArrayLike, name: str = "X") -> "AtomicCoordinates":
        """Anonymous point set, one pseudo-residue per point."""
        arr = np.asarray(points, dtype=np.float64)
        n = len(arr)
        return AtomicCoordinates(
            positions=arr,
            atom_names=[name] * n,
            residue_indices=list(range(n)),
            residue_codes=["UNK"] * n,
        )

    def with_residue_codes(self, codes: Sequence[str]) -> "AtomicCoordinates":
        """Relabel atoms from a per-residue list of 3-letter codes."""
        if self.residue_indices and max(self.residue_indices) >= len(codes):
            needed = max(self.residue_indices) + 1
            raise InputError(f"{len(codes)} residue codes for {needed} residues")
        return self.model_copy(
            update={"residue_codes": [codes[i] for i in self.residue_indices]}
        )

    def select(self, names: Sequence[str]) -> "AtomicCoordinates":
        """Atoms whose name is in names, in their original order."""
        keep = [i for i, n in enumerate(self.atom_names) if n in names]
        return AtomicCoordinates(
            positions=self.positions[keep],
            atom_names=[self.atom_names[i] for i in keep],
            residue_indices=[self.residue_indices[i] for i in keep],
            residue_codes=[self.residue_codes[i] for i in keep],
        )


class ResidueAngles(BaseModel):
    """Dihedral angles of one residue in radians; omega defaults to trans."""

    phi: float
    psi: float
    omega: float = math.pi
    chi1: float | None = None
    chi2: float | None = None
    chi3: float | None = None
    chi4: float | None = None

    def get(self, slot: str) -> float | None:
        if slot not in DIHEDRAL_SLOTS:
            raise KeyError(slot)
        return getattr(self, slot)

    def chi_slots(self) -> list[str]:
        return [s for s in CHI_SLOTS if getattr(self, s) is not None]


class FullAtomAngles(BaseModel):
    residues: list[ResidueAngles] = Field(default_factory=list)

    def __len__(self) -> int:
        return len(self.residues)


class ResidueGradient(BaseModel):
    """dL/dangle per variable slot of one residue; absent slots are fixed."""

    phi: float = 0.0
    psi: float = 0.0
    omega: float | None = None
    chi1: float | None = None
    chi2: float | None = None
    chi3: float | None = None
    chi4: float | None = None

    def get(self, slot: str) -> float | None:
        return getattr(self, slot)


class FullAtomGradient(BaseModel):
    residues: list[ResidueGradient] = Field(default_factory=list)


class BackboneAngles(BaseModel):
    """
    Batch of backbone chains stored as padded (batch, max_len) arrays plus the
    true length of every item. Padding is ignored by all passes.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    phi: np.ndarray
    psi: np.ndarray
    omega: np.ndarray
    lengths: np.ndarray

    @model_validator(mode="after")
    def check_shapes(self) -> "BackboneAngles":
        shape = self.phi.shape
        if self.phi.ndim != 2 or self.psi.shape != shape or self.omega.shape != shape:
            raise ValueError("phi, psi and omega must share one (batch, max_len) shape")
        if self.lengths.shape != (shape[0],):
            raise ValueError("one length per batch item is required")
        bad = [int(n) for n in self.lengths if not 1 <= n <= shape[1]]
        if bad:
            raise InputError(f"item lengths {bad} outside 1..{shape[1]}")
        return self

    @staticmethod
    def from_items(
        phis: Sequence[npt.ArrayLike],
        psis: Sequence[npt.ArrayLike],
        omegas: Sequence[npt.ArrayLike] | None = None,
    ) -> "BackboneAngles":
        if len(phis) != len(psis) or (omegas is not None and len(omegas) != len(phis)):
            raise InputError("phi, psi and omega need the same number of items")
        lengths = np.array([len(np.atleast_1d(p)) for p in phis], dtype=np.int64)
        width = int(lengths.max()) if len(lengths) else 0
        batch = len(phis)
        phi = np.zeros((batch, width))
        psi = np.zeros((batch, width))
        omega = np.full((batch, width), math.pi)
        for b in range(batch):
            n = lengths[b]
            p, s = np.atleast_1d(phis[b]), np.atleast_1d(psis[b])
            if len(s) != n:
                raise InputError(f"item {b}: {n} phi values but {len(s)} psi values")
            phi[b, :n], psi[b, :n] = p, s
            if omegas is not None:
                o = np.atleast_1d(omegas[b])
                if len(o) != n:
                    raise InputError(f"item {b}: {n} phi values but {len(o)} omega values")
                omega[b, :n] = o
        return BackboneAngles(phi=phi, psi=psi, omega=omega, lengths=lengths)

    @property
    def batch_size(self) -> int:
        return len(self.lengths)

    def item(self, b: int) -> tuple[FloatArray, FloatArray, FloatArray]:
        n = int(self.lengths[b])
        return self.phi[b, :n], self.psi[b, :n], self.omega[b, :n]

    def items(self) -> list[tuple[FloatArray, FloatArray, FloatArray]]:
        return [self.item(b) for b in range(self.batch_size)]


class BackboneGradient(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    phi: np.ndarray
    psi: np.ndarray
