class ApplicationError(Exception):
    def __init__(self, message: str = "Experiment failed"):
        super().__init__(message)
        self.message = message


class ConfigurationError(ApplicationError):
    def __init__(self, details: str):
        super().__init__(message=f"Invalid configuration: {details}")


class UnknownExperimentError(ConfigurationError):
    def __init__(self, name: str):
        super().__init__(details=f"unknown experiment {name!r}")
        self.name = name


class NoSamplesError(ApplicationError):
    def __init__(self):
        super().__init__(message="no samples")


class OutputError(ApplicationError):
    def __init__(self, path: object, reason: str = ""):
        super().__init__(message=f"Cannot write {path}: {reason}")
        self.path = path
