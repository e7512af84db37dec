from typing import Any, Optional, Tuple


class MetacirculantError(Exception):
    pass


class DegreeMismatch(MetacirculantError, ValueError):
    def __init__(self, left: int, right: int):
        super().__init__(f"Degree mismatch: {left} != {right}")
        self.left = left
        self.right = right


class PreconditionError(MetacirculantError, ValueError):
    pass


class ParseError(MetacirculantError, ValueError):
    pass


class NotFound(MetacirculantError):
    pass


class CapExceeded(MetacirculantError):
    def __init__(self, size: int, cap: int, what: str = "group"):
        super().__init__(f"{what} of size {size} exceeds cap {cap}")
        self.size = size
        self.cap = cap


class SearchBudgetExceeded(MetacirculantError):
    """Raised when a search runs out of nodes.

    ``partial`` holds whatever the search had built so far; ``complete`` is always False
    and the partial result must not be used as an answer.
    """

    def __init__(self, label: str, used: int, limit: int, partial: Optional[Any] = None):
        super().__init__(f"{label}: search budget of {limit} nodes exceeded after {used}")
        self.label = label
        self.used = used
        self.limit = limit
        self.partial = partial
        self.complete = False
        self.usable = False


class AdjacencyMismatch(MetacirculantError):
    def __init__(self, pair: Tuple[Any, Any], message: str = "adjacency not preserved"):
        super().__init__(f"{message}: {pair}")
        self.pair = pair
