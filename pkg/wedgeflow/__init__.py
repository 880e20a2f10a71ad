"""Wave-front tracking for steady supersonic Euler flow past a wedge."""

import logging
import os
from logging.handlers import RotatingFileHandler

__version__ = "0.4.0"

LOG_FORMAT = '%(asctime)s %(levelname)s: %(message)s [in %(pathname)s:%(lineno)d]'


def setup_logging(level="INFO", log_dir=None):
    """Setup logging for the ``wedgeflow`` logger tree.

    A stream handler is always installed; ``log_dir`` adds a rotating file handler
    next to the run outputs.
    """
    root = logging.getLogger("wedgeflow")
    root.setLevel(getattr(logging, str(level).upper(), logging.INFO))
    for handler in list(root.handlers):
        root.removeHandler(handler)

    stream_handler = logging.StreamHandler()
    stream_handler.setFormatter(logging.Formatter(LOG_FORMAT))
    root.addHandler(stream_handler)

    if log_dir:
        os.makedirs(log_dir, exist_ok=True)
        file_handler = RotatingFileHandler(
            os.path.join(log_dir, 'wedgeflow.log'),
            maxBytes=10240000,  # 10MB
            backupCount=10,
        )
        file_handler.setFormatter(logging.Formatter(LOG_FORMAT))
        file_handler.setLevel(logging.INFO)
        root.addHandler(file_handler)

    root.propagate = False
    root.info('wedgeflow %s logging at %s', __version__, logging.getLevelName(root.level))
    return root
