class SeparabilityError(RuntimeError):
    pass


class UnsupportedScenarioError(SeparabilityError):
    """Scenario has no closed form, is not factorizable, or is not cataloged."""


class NonConvergenceError(SeparabilityError):
    pass


class NearSingularError(SeparabilityError):
    pass


class UndefinedProbabilityError(SeparabilityError):
    pass


__all__ = [
    "SeparabilityError",
    "UnsupportedScenarioError",
    "NonConvergenceError",
    "NearSingularError",
    "UndefinedProbabilityError",
]
