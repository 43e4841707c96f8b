import sys

from loguru import logger

from overlapkit.config import LOG_FILE, LOG_LEVEL

__version__ = "1.0.0"

log_format = "<green>{time:YYYY-MM-DD hh:mm:ss.SSS}</green> | <level>{level: <8}</level> | <cyan>{name: <26}</cyan> | <level>{message}</level>"

# Reports are written to stdout, so logs go to stderr
handlers = [dict(sink=sys.stderr, format=log_format, level=LOG_LEVEL)]
if LOG_FILE:
    handlers.append(dict(sink=LOG_FILE, format=log_format, level=LOG_LEVEL, rotation="50 MB"))

logger.configure(handlers=handlers)
