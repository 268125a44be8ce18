"""Autoregressive layer-by-layer knowledge distillation of speech encoders at desk scale."""

__version__ = "0.1.0"
