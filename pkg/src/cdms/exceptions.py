class LoadError(ValueError):
    """Malformed matrix or label file."""


class ConfigError(ValueError):
    """Unknown key, unparsable value or violated invariant in a config file."""


class DivergenceError(RuntimeError):
    """A non-finite value appeared in the solver state."""

    def __init__(self, iteration, layer, name):
        self.iteration = iteration
        self.layer = layer
        self.name = name
        super().__init__(
            f"non-finite values in {name} at iteration {iteration}, layer {layer}"
        )
