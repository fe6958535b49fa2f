"""
Shared package for the reduced-reference quality services.
Contains common enums and environment-driven settings.
"""

from . import models
from . import config

__version__ = "0.1.0"
