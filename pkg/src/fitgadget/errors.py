"""Exception hierarchy.

The three base classes map onto CLI exit codes: contract violations (1),
input errors (2) and exhausted budgets (3).
"""


class FitGadgetError(Exception):
    exit_code = 2


class InputError(FitGadgetError):
    exit_code = 2


class ContractViolation(FitGadgetError):
    """A proven property failed to hold; always indicates a bug."""

    exit_code = 1


class BudgetError(FitGadgetError):
    exit_code = 3


# group-core
class NonAssociativeTable(InputError):
    pass


class NoIdentity(InputError):
    pass


class MissingInverse(InputError):
    pass


class UnknownBuiltin(InputError):
    pass


class IndexOutOfRange(InputError):
    pass


class ClosureCapExceeded(BudgetError):
    pass


class NotNormal(InputError):
    pass


# structure
class BaerSetNotSubgroup(ContractViolation):
    pass


class NotSolvable(InputError):
    pass


class LatticeCapExceeded(BudgetError):
    pass


class NotNested(InputError):
    pass


# poly
class ArityMismatch(InputError):
    pass


class GroupMismatch(InputError):
    pass


class CapExceeded(BudgetError):
    pass


class SLPFormatError(InputError):
    pass


# gadget
class FittingLengthTooSmall(InputError):
    pass


class NoCandidate(ContractViolation):
    pass


class NonUniqueMaximal(ContractViolation):
    pass


class CentralizerIsWholeGroup(ContractViolation):
    pass


class NoWitness(ContractViolation):
    pass


class LevelOutOfRange(InputError):
    pass


class BudgetExceeded(BudgetError):
    pass


# reduce
class ContextNotPrepared(InputError):
    pass


class WitnessInvalid(ContractViolation):
    pass


class DimacsFormatError(InputError):
    pass
