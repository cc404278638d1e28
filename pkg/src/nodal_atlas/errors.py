"""Exception taxonomy.

Every contract violation raised by the toolkit derives from
:class:`NodalAtlasError`, grouped by the module that owns the contract.
"""


class NodalAtlasError(Exception):
    """Base class for all toolkit errors."""


# -- mesh construction and symmetry validation --------------------------------

class MeshError(NodalAtlasError):
    """Base class for mesh construction/validation failures."""


class NonManifoldError(MeshError):
    """An edge belongs to a number of triangles different from 2."""


class DisconnectedError(MeshError):
    """The mesh is not connected (or has unused vertices)."""


class DegenerateTriangleError(MeshError):
    """A triangle violates the strict triangle inequality."""


class InconsistentOrientationError(MeshError):
    """Triangle windings do not define a global orientation."""


class NotInvolutiveError(MeshError):
    """The vertex map composed with itself is not the identity."""


class NotSimplicialError(MeshError):
    """The vertex map does not send triangles to triangles."""


class NotIsometricError(MeshError):
    """The vertex map changes some edge length."""


class OrientationPreservingError(MeshError):
    """The involution preserves orientation (only reversing ones are analyzed)."""


class FixedSetNotCurveError(MeshError):
    """Fixed vertices do not organize into disjoint simple closed loops.

    Signals a mesh whose symmetry axis is not resolved by the triangulation.
    """


class BadResolutionError(MeshError):
    """Generator resolution incompatible with the requested symmetry."""


# -- spectral ------------------------------------------------------------------

class SpectralError(NodalAtlasError):
    """Base class for operator assembly / eigensolver failures."""


class NumericallyDegenerateError(SpectralError):
    """A corner angle is within tolerance of 0 or pi."""


class NoConvergenceError(SpectralError):
    """Eigensolver exhausted its iteration budget or missed the residual target."""


class BadKError(SpectralError):
    """Requested eigenpair count outside [1, vertex_count)."""


class MixedParityResidualError(SpectralError):
    """A cluster vector retains a large projection onto both parities.

    Usually means the eigenvalue cluster tolerance is too small for the
    solver accuracy.
    """


# -- restriction ---------------------------------------------------------------

class RestrictionError(NodalAtlasError):
    """Base class for curve-restriction failures."""


class NotAPathError(RestrictionError):
    """Consecutive vertices are not joined by mesh edges."""


class NotClosedError(RestrictionError):
    """The closing edge of the cyclic vertex list is missing."""


class SelfIntersectingError(RestrictionError):
    """The vertex loop repeats a vertex."""


class ZeroEigenvalueError(RestrictionError):
    """Normalized Neumann data undefined for a zero eigenvalue."""


class LengthMismatchError(RestrictionError):
    """Weight samples do not align with the trace samples."""


class EmptySegmentError(RestrictionError):
    """Arc endpoints resolve to the same path vertex."""


class AllAmbiguousError(RestrictionError):
    """Every trace sample lies below the zero tolerance."""


# -- nodal sets and graphs -----------------------------------------------------

class NodalError(NodalAtlasError):
    """Base class for nodal extraction failures."""


class WrongParityError(NodalError):
    """Operation requires an eigenpair of the other (or a definite) parity."""


class InconsistentInputsError(NodalError):
    """Domain and graph inputs come from different parities/pairs."""


class FixedSetRequiredError(NodalError):
    """Odd-pair nodal machinery needs the full fixed-point set."""


# -- asymptotic statistics -----------------------------------------------------

class AsymptoticsError(NodalAtlasError):
    """Base class for statistics-layer failures."""


class TooFewPairsError(AsymptoticsError):
    """Partial-sum series needs more eigenpairs."""


class HypothesisFailedError(AsymptoticsError):
    """The density-one extraction could not certify its first threshold."""


class PathNotFixedError(AsymptoticsError):
    """Statistic requires a path inside the fixed-point set."""


# -- pipeline ------------------------------------------------------------------

class PipelineError(NodalAtlasError):
    """Base class for configuration/pipeline failures."""


class ConfigInvalidError(PipelineError):
    """Pipeline configuration violates its invariants."""


class MeshLoadFailedError(PipelineError):
    """Mesh files missing or malformed."""


class SolverFailedError(PipelineError):
    """Eigensolve stage failed; carries the module context."""


class BundleCorruptError(PipelineError):
    """Report bundle missing or structurally unreadable."""
