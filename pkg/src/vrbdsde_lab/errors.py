"""Exception types shared across the lab."""


class LabError(Exception):
    """Base class for every error raised by vrbdsde_lab."""


class GridTooLarge(LabError, ValueError):
    pass


class UnsupportedDimension(LabError, ValueError):
    pass


class IndexMismatch(LabError, ValueError):
    pass


class AssumptionViolated(LabError):
    """A structural assumption on (f, g, X) failed on a probe.

    ``witness`` holds the offending probe(s), e.g. ``((t, y, l), (t, y, l'))``.
    """

    def __init__(self, check: str, witness, message: str = ""):
        self.check = check
        self.witness = witness
        super().__init__(message or f"{check} failed at {witness}")


class BracketExhausted(LabError):
    pass


class RootBracketFailure(LabError):
    pass


class ClampedIndex(LabError):
    pass


class ContractionViolated(LabError):
    def __init__(self, constant: float, message: str = ""):
        self.constant = constant
        super().__init__(
            message
            or (
                "existence/uniqueness contraction condition "
                "2TL(1+sqrt2*K/k*(1+sqrtT)) + L*sqrt(2T) < 1 fails: "
                f"c = {constant:.6g} (check drift.lipschitz_y, diffusion.e, "
                "drift.k, drift.K, grid.T)"
            )
        )


class NoConvergence(LabError):
    def __init__(self, iterations: int, residual: float):
        self.iterations = iterations
        self.residual = residual
        super().__init__(
            f"Picard iteration did not reach tolerance after {iterations} "
            f"iterations (last gap {residual:.3e}); raise solver.max_iter"
        )


class HypothesisFailed(LabError):
    """Comparison hypothesis failure. Recorded in reports, not raised by them."""

    def __init__(self, hypothesis: str, witness, excess: float):
        self.hypothesis = hypothesis
        self.witness = witness
        self.excess = excess
        super().__init__(f"comparison hypothesis {hypothesis} fails by {excess:.3e} at {witness}")


class ConfigError(LabError, ValueError):
    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"config key '{key}': {message}")
