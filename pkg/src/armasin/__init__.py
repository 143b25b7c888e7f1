"""Spectral regularisation and ARMA-SIN forecasting."""
