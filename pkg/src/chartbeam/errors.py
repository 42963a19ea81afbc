"""Exception types shared across the toolkit."""


class ChartbeamError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(ChartbeamError):
    """Invalid configuration value or file (CLI exit code 2)."""


class FrontHalfspaceError(ChartbeamError, ValueError):
    """Departure direction lies outside the array's front half-space."""


class EmptyPathSetError(ChartbeamError):
    """Every propagation path between a BS and a user is blocked."""


class ShadowedSceneError(ChartbeamError):
    """Too many users are fully shadowed; the scene is misconfigured."""


class ZeroChannelError(ChartbeamError):
    """Channel vector has (numerically) zero norm."""

    def __init__(self, msg="channel has zero norm", index=None):
        super().__init__(msg if index is None else f"{msg} (index {index})")
        self.index = index


class ZeroPrecoderError(ChartbeamError):
    """Raw precoder output has (numerically) zero norm."""

    def __init__(self, msg="precoder has zero norm", index=None):
        super().__init__(msg if index is None else f"{msg} (batch index {index})")
        self.index = index


class DisconnectedGraphError(ChartbeamError):
    """Neighbor graph is disconnected; geodesics are undefined."""

    def __init__(self, component_sizes):
        sizes = sorted(component_sizes, reverse=True)
        super().__init__(f"graph has {len(sizes)} components with sizes {sizes}")
        self.component_sizes = sizes


class ConvergenceFailureError(ChartbeamError):
    """Iterative eigensolver did not reach tolerance within max iterations."""

    def __init__(self, residual, max_iter):
        super().__init__(
            f"eigensolver residual {residual:.3e} after {max_iter} iterations"
        )
        self.residual = residual
        self.max_iter = max_iter


class NonFiniteLossError(ChartbeamError):
    """Training loss became NaN or infinite."""

    def __init__(self, epoch, batch):
        super().__init__(f"non-finite loss at epoch {epoch}, batch {batch}")
        self.epoch = epoch
        self.batch = batch
