class DomainError(Exception):
    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


class EmptyWindowError(DomainError):
    def __init__(self, message: str = "empty window"):
        super().__init__(message=message)


class CoverageError(DomainError):
    def __init__(self, what: str, window: object):
        super().__init__(message=f"{what} outside window {window}")


class ResonantEnergyError(DomainError):
    def __init__(self, energy: float, gap: float):
        super().__init__(message=f"resonant energy: E={energy!r} lies within {gap:.3e} of the spectrum")
        self.energy = energy
        self.gap = gap
