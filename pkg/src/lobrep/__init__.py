"""lobrep: limit order book reconstruction, representations, perturbations
and price-movement forecasting experiments."""

__version__ = "0.1.0"
