"""Command-line driver and result-file formats."""
from .config import CONFIG_SCHEMA, PipelineConfig, load_config, parse_config
from .main import main

__all__ = ["CONFIG_SCHEMA", "PipelineConfig", "load_config", "parse_config", "main"]
