"""
KernelTestLab - Logging Setup
Installs loguru sinks for command-line runs
"""

import sys
from pathlib import Path
from typing import Optional

from loguru import logger

from src.config.config_loader import config


def setup_logging(level: Optional[str] = None, log_file: Optional[Path] = None) -> None:
    """
    Replace the default loguru sink with the configured ones

    Args:
        level: Console level (defaults to config.log_level)
        log_file: Explicit log file; when None the YAML file_sink toggle decides
    """
    level = (level or config.log_level).upper()
    logger.remove()
    logger.add(sys.stderr, level=level, format=config.log_format)

    file_settings = config.log_file_settings
    if log_file is None and file_settings['enabled']:
        log_file = config.log_dir / 'kerneltestlab.log'

    if log_file is not None:
        Path(log_file).parent.mkdir(parents=True, exist_ok=True)
        logger.add(
            str(log_file),
            level='DEBUG',
            format=config.log_format,
            rotation=file_settings['rotation'],
            retention=file_settings['retention'],
            compression=file_settings['compression'],
        )
        logger.debug(f"File log sink: {log_file}")
