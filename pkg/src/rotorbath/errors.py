"""Exception types shared across the simulator.

The CLI maps these onto exit codes: configuration problems exit 1,
numerical failures (basis/grid overflow, positivity loss, non-convergent
sums) exit 2, and I/O problems exit 3.
"""


class RotorBathError(Exception):
    """Base class for all rotorbath errors."""


class ConfigError(RotorBathError):
    """Invalid physical or numerical parameters.

    Carries the full list of violated invariants so a caller can report
    them all at once instead of fixing one at a time.
    """

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class BasisError(RotorBathError):
    """Momentum basis too small: packet tails or probability leak past the edge."""


class GridError(RotorBathError):
    """Phase-space grid too small or mass reaching the momentum boundary."""


class PositivityError(RotorBathError):
    """Density matrix developed a significantly negative eigenvalue."""


class ConvergenceError(RotorBathError):
    """An infinite sum or product failed to converge within the iteration cap."""


class FitWindowError(RotorBathError):
    """Requested fit window contains too few points."""
