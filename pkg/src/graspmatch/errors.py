"""Exception classes shared across the package."""


class GraspMatchError(Exception):
    """Base class for all errors raised by this package."""


class MalformedHeader(GraspMatchError):
    """Cloud file header is missing or syntactically invalid."""


class NonFiniteCoordinate(GraspMatchError):
    """A parsed coordinate or normal component is nan/inf."""


class NormalCountMismatch(GraspMatchError):
    """Some records carry normals and others do not."""


class TooFewPoints(GraspMatchError):
    """Operation needs more points than the cloud provides."""


class DegenerateNeighborhood(GraspMatchError):
    """A normal-estimation neighborhood is geometrically degenerate."""


class EmptyCloud(GraspMatchError):
    """Operation requires a nonempty cloud."""


class MissingNormals(GraspMatchError):
    """Cloud has no normals; estimate them first."""


class NotUnitVector(GraspMatchError):
    """Vector expected to have unit length does not."""


class BinSizeMismatch(GraspMatchError):
    """Histograms being matched use different angular bin sizes."""


class ResolutionMismatch(GraspMatchError):
    """Voxel grids being correlated use different resolutions."""


class ModelExceedsGrid(GraspMatchError):
    """Rotated gripper model does not fit inside the gripper grid."""


class ModelFormatError(GraspMatchError):
    """Grasp model file is malformed."""


class SceneFormatError(GraspMatchError):
    """Scene spec file is malformed."""
