"""Single higher-order ODEs for nonlinear circuits by differential elimination."""

__version__ = "0.1.0"
