"""Exception hierarchy shared by every module."""


class AdtError(Exception):
    """Base class for all errors raised by adtkit."""


class DimensionError(AdtError, ValueError):
    """Operands act on different numbers of site-flavors."""


class ShapeError(AdtError, ValueError):
    """A dense array has an unusable shape."""


class ValidationError(AdtError, ValueError):
    """An input violates a documented precondition."""


class MissingDataError(AdtError, KeyError):
    """A state lacks expectation values that a computation needs."""

    def __init__(self, missing, context=""):
        self.missing = tuple(sorted(str(w) for w in missing))
        shown = ", ".join(self.missing[:20])
        if len(self.missing) > 20:
            shown += f", ... ({len(self.missing)} total)"
        msg = f"missing expectation values for: {shown}"
        if context:
            msg = f"{context}: {msg}"
        super().__init__(msg)

    def __str__(self):
        return self.args[0]


class ResourceError(AdtError, RuntimeError):
    """A configured size cap would be exceeded."""


class PoleProximityError(AdtError, ValueError):
    """A frequency sits on (or numerically at) a pole."""

    def __init__(self, omega, pole):
        self.omega = omega
        self.pole = pole
        super().__init__(f"frequency {omega!r} lies within 1e-9 of pole {pole!r}")


class SingularError(AdtError, ZeroDivisionError):
    """A closed-form expression is evaluated at its singular point."""


class ConfigError(AdtError, ValueError):
    """A run configuration is malformed; ``key`` names the offending entry."""

    def __init__(self, message, key=None, line=None):
        self.key = key
        self.line = line
        prefix = ""
        if key is not None:
            prefix = f"{key}: "
        elif line is not None:
            prefix = f"line {line}: "
        super().__init__(prefix + message)
