"""Exception hierarchy.

Errors fall into three families that the CLI maps to exit codes:
input-format problems (3), computational failures (4) and everything else.
"""

from __future__ import annotations


class OrgNetError(Exception):
    """Base class for all package errors."""


class InputFormatError(OrgNetError):
    """Malformed or inconsistent input data."""


class ComputationError(OrgNetError):
    """A numerical routine could not produce a result."""


# --- tree construction -----------------------------------------------------


class TreeError(InputFormatError):
    def __init__(self, message: str, ids=()):
        self.ids = tuple(ids)
        if self.ids:
            shown = ", ".join(map(str, self.ids[:10]))
            more = f" (+{len(self.ids) - 10} more)" if len(self.ids) > 10 else ""
            message = f"{message}: {shown}{more}"
        super().__init__(message)


class MultipleRoots(TreeError):
    pass


class CycleDetected(TreeError):
    pass


class DuplicateParent(TreeError):
    pass


class DisconnectedNode(TreeError):
    pass


class UnknownNode(OrgNetError, KeyError):
    def __init__(self, node):
        self.node = node
        super().__init__(f"unknown node: {node!r}")

    def __str__(self):
        return self.args[0]


class UnknownTeam(OrgNetError, KeyError):
    def __init__(self, team):
        self.team = team
        super().__init__(f"unknown team: {team!r}")

    def __str__(self):
        return self.args[0]


# --- parsing / ingest -------------------------------------------------------


class MissingHeader(InputFormatError):
    pass


class MalformedRow(InputFormatError):
    def __init__(self, line: int, detail: str = ""):
        self.line = line
        msg = f"malformed row at line {line}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class NegativeCount(InputFormatError):
    pass


class SelfLoop(InputFormatError):
    pass


class EmptyIntersection(InputFormatError):
    pass


class NodeSetMismatch(InputFormatError):
    pass


# --- computation ------------------------------------------------------------


class PrimeCapacityExceeded(ComputationError):
    pass


class DegenerateSample(ComputationError):
    pass


class DegenerateDesign(ComputationError):
    pass


class EmptyGraph(ComputationError):
    pass


class NotConverged(ComputationError):
    pass


class Disconnected(ComputationError):
    pass


class NotATree(ComputationError):
    pass


class RootAbsent(ComputationError):
    pass


class UnknownStatistic(OrgNetError, KeyError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"unknown statistic: {name!r}")

    def __str__(self):
        return self.args[0]
