"""Stock price forecasting with from-scratch recurrent networks."""

__version__ = "0.1.0"
