"""Exception taxonomy shared by all pelviseg modules."""


class PelvisegError(Exception):
    """Base class for all pelviseg errors."""


class InvalidClassError(PelvisegError):
    """A class id outside the foreground range 1..4 was requested."""


class LabelOutOfRangeError(PelvisegError):
    """A voxel label falls outside the canonical range 0..4."""


class UnmappedLabelError(PelvisegError):
    """A label present in the data has no entry in the supplied mapping."""


class DimMismatchError(PelvisegError):
    """Two volumes that must share a grid have different dims or spacing."""


class EmptyMaskError(PelvisegError):
    """An operation that needs foreground voxels received an empty mask."""


class FullMaskError(PelvisegError):
    """Signed distance is undefined when the mask covers the whole grid."""


class NotNiftiError(PelvisegError):
    """The file is not a single-file NIfTI-1 volume."""


class UnsupportedDatatypeError(PelvisegError):
    """The NIfTI datatype code is outside the supported label family."""


class UnsupportedRankError(PelvisegError):
    """The volume is not 3-D (trailing singleton dims excepted)."""


class NonIntegralLabelsError(PelvisegError):
    """Float-typed label data contains non-integer values."""


class ScaledLabelsError(PelvisegError):
    """A label file declares a non-trivial scl_slope/scl_inter scaling."""


class EmptyInputError(PelvisegError):
    """An aggregate operation received no input records."""


class RaggedMatrixError(PelvisegError):
    """A grid emission received rows of unequal length."""


class TooFewCasesError(PelvisegError):
    """A sub-dataset has too few cases to split."""


class OverrideMismatchError(PelvisegError):
    """Published split counts do not add up to the manifest case count."""


class SpecOutOfBoundsError(PelvisegError):
    """A phantom primitive does not fit inside the requested grid."""


class UnsatisfiableGapError(PelvisegError):
    """A phantom fragment cannot be placed at the requested distance."""
