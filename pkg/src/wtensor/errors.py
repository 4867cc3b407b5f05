"""Exception types shared across the package."""


class WTensorError(Exception):
    """Base class for all errors raised by this package."""


# --- tensor construction / evaluation ---

class InvalidIndex(WTensorError):
    """A multi-index coordinate lies outside [1, dim], or is not canonical."""


class DuplicateEntry(WTensorError):
    """The same canonical multi-index was supplied twice."""


class OrderMismatch(WTensorError):
    """A multi-index length disagrees with the tensor order."""


class DimMismatch(WTensorError):
    """Vector length disagrees with the tensor dimension."""


# --- block-structure validation ---

class OverlapTooLarge(WTensorError):
    """No admissible block ordering keeps chain overlaps at one index or less."""


class CoverageGap(WTensorError):
    """The union of the index blocks does not cover [1, dim]."""


class SumMismatch(WTensorError):
    """Block polynomials do not sum to the target polynomial."""


class BlockNotW(WTensorError):
    """A block has several mixed terms with a negative one among them."""


class WeightSumMismatch(WTensorError):
    """Diagonal reallocation weights do not sum to the global coefficient."""


class InvalidDecomposition(WTensorError):
    """A block decomposition is structurally unusable."""


# --- hypergraphs ---

class NotATree(WTensorError):
    """The supplied base edge set is not a tree."""


class UnsupportedTopology(WTensorError):
    """Two hyperedges share more than one vertex."""


# --- eigenvalue engine ---

class OddOrder(WTensorError):
    """The operation requires an even tensor order."""


class NoDecomposition(WTensorError):
    """Block mode was requested but no block decomposition is available."""


class SolverFailure(WTensorError):
    """The conic solver did not return a usable solution."""


class NotSingleTerm(WTensorError):
    """Closed-form treatment requires a block with at most one mixed term."""


class ExponentSumOdd(WTensorError):
    """Exponents of the mixed monomial must sum to an even degree."""


# --- baselines / generators ---

class NegativeCoefficient(WTensorError):
    """A nonnegative tensor was required but a negative coefficient is present."""


class DimensionMismatch(WTensorError):
    """Generator parameters are inconsistent (for instance n != s * k)."""
