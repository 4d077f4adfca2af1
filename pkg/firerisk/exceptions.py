class FireRiskError(Exception):
    """Base error of the package

    Every subclass carries the process exit code the command line reports
    when the error escapes a stage.
    """
    exit_code = 1


class SchemaError(FireRiskError, ValueError):
    """Input file does not have the expected columns or codes"""
    exit_code = 2


class PrerequisiteError(FireRiskError):
    """A pipeline stage was started before the stage it depends on"""
    exit_code = 2


class PreconditionError(FireRiskError, ValueError):
    """Arguments violate the documented precondition of an operation"""
    exit_code = 1


class LeakageError(FireRiskError):
    """Test data would influence a fitted quantity"""
    exit_code = 1


class ManifestError(FireRiskError, ValueError):
    """Feature columns do not match the manifest stored in an artifact"""
    exit_code = 1

    def __init__(self, expected, got):
        self.expected = expected
        self.got = got
        super(ManifestError, self).__init__(
            f'feature manifest mismatch: expected {self.expected}, '
            f'got {self.got}')
