from ._sememelm import (
    GraphBundle,
    Model,
    SememelmError,
    gradcheck,
    render_template,
    synth,
    tokenize,
    train,
    __version__,
)

__all__ = [
    "GraphBundle",
    "Model",
    "SememelmError",
    "gradcheck",
    "render_template",
    "synth",
    "tokenize",
    "train",
    "__version__",
]
