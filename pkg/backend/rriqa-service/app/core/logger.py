import logging
import sys
from logging.handlers import RotatingFileHandler
from pathlib import Path
from datetime import datetime
from typing import Optional

from app.core.config import settings


class Logger:
    _instance = None
    _initialized = False
    _log_file = None
    _handlers = {}

    def __new__(cls, logger_name: str = None, log_level: Optional[str] = None):
        if cls._instance is None:
            cls._instance = super(Logger, cls).__new__(cls)
        return cls._instance

    def __init__(self, logger_name: str = None, log_level: Optional[str] = None):
        level = logging.getLevelName((log_level or settings.LOG_LEVEL).upper())
        if not self._initialized:
            formatter = logging.Formatter(
                '%(asctime)s - %(name)s - %(levelname)s - [%(filename)s:%(lineno)d] - %(message)s'
            )

            root_logger = logging.getLogger()
            root_logger.setLevel(level)

            # Remove existing handlers if any
            for handler in root_logger.handlers[:]:
                root_logger.removeHandler(handler)

            # stdout carries CLI results, so the console handler writes to stderr
            if 'console' not in self._handlers:
                console_handler = logging.StreamHandler(sys.stderr)
                console_handler.setLevel(level)
                console_handler.setFormatter(formatter)
                root_logger.addHandler(console_handler)
                self._handlers['console'] = console_handler

            if settings.LOG_DIR and 'file' not in self._handlers:
                logs_dir = Path(settings.LOG_DIR)
                logs_dir.mkdir(parents=True, exist_ok=True)
                timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")
                Logger._log_file = logs_dir / f"rriqa_{timestamp}.log"
                file_handler = RotatingFileHandler(
                    self._log_file,
                    maxBytes=10*1024*1024,  # 10MB
                    backupCount=5
                )
                file_handler.setLevel(level)
                file_handler.setFormatter(formatter)
                root_logger.addHandler(file_handler)
                self._handlers['file'] = file_handler

            Logger._initialized = True

        self.logger = logging.getLogger(logger_name or "root")

    def get_logger(self):
        return self.logger

    @classmethod
    def get_log_file(cls):
        return cls._log_file if cls._instance else None

    @classmethod
    def set_level(cls, log_level: str):
        """Change the level of the root logger and every installed handler."""
        level = logging.getLevelName(log_level.upper())
        logging.getLogger().setLevel(level)
        for handler in cls._handlers.values():
            handler.setLevel(level)


# Create a default logger instance
default_logger = Logger("root").get_logger()
