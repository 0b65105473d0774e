"""Global-local shrinkage inference for nonlinear functionals of normal means."""
__version__ = "0.1.0"
