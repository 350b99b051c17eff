"""Fault hierarchy shared by every module."""


class PramFault(Exception):
    """Base class for all faults raised by the package."""


class ConflictFault(PramFault):
    def __init__(self, round_no: int, address: int, detail: str = ""):
        self.round = round_no
        self.address = address
        msg = f"conflicting Common write in round {round_no} at address {address}"
        super().__init__(msg + (f" ({detail})" if detail else ""))


class BoundsFault(PramFault):
    pass


class WordOverflowFault(PramFault):
    pass


class ParameterFault(PramFault):
    pass


class SettingFault(PramFault):
    """Operation requires a stronger access setting or write mode."""


class PreconditionFault(PramFault):
    """Order, link or schema precondition of an algorithm variant is violated."""


class LoadFault(PramFault):
    pass


class QuerySyntaxFault(PramFault):
    pass


class UnsafeQueryFault(PramFault):
    pass


class DecompositionFault(PramFault):
    pass


class SizeAssertionFault(PramFault):
    """A runtime size-discipline assertion failed."""

    def __init__(self, check: str, observed: int, bound):
        self.check = check
        self.observed = observed
        self.bound = bound
        super().__init__(f"{check}: observed {observed} > bound {bound}")


class OracleCapFault(PramFault):
    pass
