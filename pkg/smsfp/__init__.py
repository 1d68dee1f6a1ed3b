"""Segmentation-driven multi-scale shape from polarization."""
