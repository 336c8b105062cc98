"""Exception hierarchy shared across the package."""


class ConvoGateError(Exception):
    """Base class for all errors raised by this package."""


class SchemaMismatchError(ConvoGateError):
    """Label vectors, schemas, or intent orders do not line up."""


class TurnRangeError(ConvoGateError):
    """A turn range falls outside the conversation."""


class UnlabeledError(ConvoGateError):
    """Labels are required but missing on a turn or conversation."""


class CorpusFormatError(ConvoGateError):
    """A corpus record could not be parsed.

    Carries the offending location so skip-and-log policies can report it.
    """

    def __init__(self, message: str, *, path: str | None = None, line_no: int | None = None):
        self.path = path
        self.line_no = line_no
        where = f"{path or '<stream>'}:{line_no}" if line_no is not None else (path or "<stream>")
        super().__init__(f"{where}: {message}")


class TeacherError(ConvoGateError):
    """Base class for teacher-client failures."""


class TeacherTransportError(TeacherError):
    """The provider could not be reached or kept failing after retries."""


class TeacherResponseError(TeacherError):
    """The teacher responded but the reply could not be used.

    ``raw`` preserves the response text for debugging.
    """

    def __init__(self, message: str, raw: str = ""):
        self.raw = raw
        super().__init__(message)


class AnnotationCoverageError(TeacherResponseError):
    """The teacher did not label every turn exactly once."""


class BackendError(ConvoGateError):
    """A classifier backend failed to load or run."""


class BundleError(BackendError):
    """An external model bundle is missing, corrupt, or inconsistent."""


class ReportError(ConvoGateError):
    """A report is undefined (e.g. zero total tokens) or incomplete."""
