"""Exception hierarchy.

Every error carries an ``exit_code``: 2 for bad input (validation), 3 for
numerical failures. The CLI maps exceptions to process exit codes with it.
"""


class ModelError(Exception):
    exit_code = 3
    slug = "error"


class ValidationError(ModelError, ValueError):
    exit_code = 2
    slug = "validation"


class NumericalError(ModelError, ArithmeticError):
    exit_code = 3
    slug = "numerical"


class UndefinedFrequencyError(ValidationError):
    slug = "undefined-frequency"


class NonPositiveBetaError(ValidationError):
    slug = "nonpositive-beta"


class InvalidAtomError(ValidationError):
    slug = "invalid-atom"

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        msg = "; ".join(f"{d.code}: {d.detail}" for d in self.diagnostics)
        super().__init__(msg)


class InvalidStateError(ValidationError):
    slug = "invalid-initial-state"


class ConfigError(ValidationError):
    slug = "config-parse"


class NotApplicableError(ValidationError):
    slug = "not-applicable"


class UnstableStepError(NumericalError):
    slug = "unstable-step"


# A zero rate is a property of the scenario, so it is reported as bad input.
class ReducibleSystemError(ValidationError):
    slug = "reducible-system"
