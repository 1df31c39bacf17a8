"""Exception hierarchy.

Every error raised by the library derives from :class:`PohozaevError`; the CLI
maps each subclass to its own exit code (see ``EXIT_CODES``).
"""


class PohozaevError(Exception):
    """Base class for all library errors."""


class NonFiniteValue(PohozaevError):
    pass


class PhiNonpositive(PohozaevError):
    """Phi(u) <= 0, so the fiber t -> I(u_t) has no interior maximum."""


class BracketNotFound(PohozaevError):
    pass


class NotOnManifold(PohozaevError):
    pass


class GridTooCoarse(PohozaevError):
    pass


class NonadmissibleExponents(PohozaevError):
    pass


class EpsilonTooLarge(PohozaevError):
    pass


class PhiNeverPositive(PohozaevError):
    pass


class MissingGradient(PohozaevError):
    pass


class NoConvergence(PohozaevError):
    """Raised by the solver; ``report`` holds the best iterate found."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class ConfigError(PohozaevError):
    """Base for configuration problems; carries every issue found, not just the first."""

    def __init__(self, issues):
        if isinstance(issues, str):
            issues = [issues]
        self.issues = list(issues)
        super().__init__("; ".join(self.issues))


class ParseError(ConfigError):
    pass


class ValidationError(ConfigError):
    pass


EXIT_CODES = {
    ParseError: 2,
    ValidationError: 3,
    NonadmissibleExponents: 4,
    PhiNonpositive: 5,
    PhiNeverPositive: 6,
    BracketNotFound: 7,
    NoConvergence: 8,
    GridTooCoarse: 9,
    NotOnManifold: 10,
    EpsilonTooLarge: 11,
    MissingGradient: 12,
    NonFiniteValue: 13,
}
HYPOTHESIS_FAILURE_EXIT = 20


def exit_code_for(exc):
    for cls in type(exc).__mro__:
        if cls in EXIT_CODES:
            return EXIT_CODES[cls]
    return 1
