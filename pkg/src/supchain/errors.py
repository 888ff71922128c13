"""Exception hierarchy shared by all modules."""


class DomainError(ValueError):
    """An argument lies outside the domain of an operation."""


class ConfigurationError(ValueError):
    """A model or experiment configuration is inconsistent or unusable."""


class HypothesisError(ConfigurationError):
    """Chaining hypotheses fail for the requested parameters."""


class KernelAuditError(ConfigurationError):
    """A kernel violates its declared Hoelder bound."""

    def __init__(self, report):
        self.report = report
        s, t, w = report.worst_tuple
        super().__init__(
            f"kernel {report.family!r} misdeclared: worst ratio {report.worst_ratio:.6g} "
            f"at s={s!r}, t={t!r}, omega={w!r}"
        )
