"""Exception types shared across the package."""


class BVHomeoError(Exception):
    """Base class for all package errors."""


class DegenerateInput(BVHomeoError):
    """Geometric input collapses below the coincidence tolerance."""


class OnCurve(BVHomeoError):
    """Query point lies on the curve; winding degree is undefined."""


class NotSimple(BVHomeoError):
    """Polygon or polyline self-intersects where simplicity is required."""


class OutsidePolygon(BVHomeoError):
    """Query point is not inside the closed polygon."""


class BadWindow(BVHomeoError):
    """Requested window is empty or not contained in the line's interval."""


class NoValidCut(BVHomeoError):
    """Segmentation could not find a cut point meeting its variation bounds."""


class PreconditionFailed(BVHomeoError):
    """Measured input data violates a documented precondition."""


class BudgetUnreachable(BVHomeoError):
    """Grid refinement cap hit before the selection budgets could be met."""


class SearchExhausted(BVHomeoError):
    """Randomized candidate search ran out of trials."""


class ExclusionBudgetExceeded(BVHomeoError):
    """Exclusion segments cannot fit their total-length budget."""


class DegenerateTransversal(BVHomeoError):
    """A grid crossing is tangential or otherwise unusable."""


class NCBVUnavailable(BVHomeoError):
    """No injectification route: unsupported overlap structure and no witness."""


class NotConverged(BVHomeoError):
    """Witness sequence does not exhibit the required convergence."""


class CombinatoricsBroken(BVHomeoError):
    """Snapped curve lost a combinatorial invariant (crossing pattern, parity)."""


class ExtensionFailed(BVHomeoError):
    """Minimal extension hit its depth cap without meeting the budget."""


class GlueMismatch(BVHomeoError):
    """Adjacent pieces disagree on a shared edge."""


class UnknownMap(BVHomeoError):
    """Requested built-in map name does not exist."""
