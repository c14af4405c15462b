import math

from protkin.geometry import TransformParams

# backbone bond transforms: N-CA carries phi, CA-C carries psi, C-N carries omega
N_CA = TransformParams(theta=math.pi - 1.9391, d=1.460)
CA_C = TransformParams(theta=math.pi - 2.0610, d=1.525)
C_N = TransformParams(theta=math.pi - 2.1186, d=1.330)

BACKBONE_PARAMS: dict[str, TransformParams] = {
    "phi": N_CA,
    "psi": CA_C,
    "omega": C_N,
}

BACKBONE_ATOMS = ("N", "CA", "C")

DIHEDRAL_SLOTS = ("phi", "psi", "omega", "chi1", "chi2", "chi3", "chi4")
CHI_SLOTS = ("chi1", "chi2", "chi3", "chi4")
FIXED_SLOT = "fixed"
MAX_DIHEDRAL_SLOTS = 7

# one-letter codes of the 20 standard amino acids
STANDARD_RESIDUES = "ACDEFGHIKLMNPQRSTVWY"
