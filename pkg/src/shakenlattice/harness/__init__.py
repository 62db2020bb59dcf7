"""Batch runs, figure data, the SI-unit calculator and acceptance validation."""
from .config import RunConfig, load_config
from .si import SIParams, si_calculator
