"""Exception types raised across the laboratory."""


class BihlabError(Exception):
    """Base class for all laboratory errors."""


class NotSkew(BihlabError):
    """Input matrix has a symmetric part too large to invert spn."""


class Empty(BihlabError):
    """Domain has no active voxels."""


class Disconnected(BihlabError):
    """Active voxel set is not face-connected."""


class IncompatibleWidths(BihlabError):
    """Mask band widths violate the chain compatibility rule."""


class WeightNotSPD(BihlabError):
    """A weight block is not symmetric positive definite."""


class RankDeficient(BihlabError):
    """Numerical rank of a subspace is ambiguous (no clear spectral gap)."""


class NoSpectralGap(BihlabError):
    """Eigenvalue cut between harmonic and non-harmonic modes is ambiguous."""


class SolverDiverged(BihlabError):
    """Iterative solver hit its iteration cap without converging."""


class NotInRange(BihlabError):
    """Right-hand side is not in the (closure of the) range of the operator."""


class ShapeMismatch(BihlabError):
    """Operator expression sides have incompatible shapes."""


class HeaderMismatch(BihlabError):
    """Field file header disagrees with the expected rank or grid."""


class FieldIoError(BihlabError):
    """Field file is unreadable or truncated."""
