import logging

from src.core.config import get_settings

ROOT_LOGGER_NAME = "nabla_frac"


def get_logger(name: str) -> logging.Logger:
    """
    Return a logger under the package namespace.

    Usage: log = get_logger(__name__)
    """
    root = logging.getLogger(ROOT_LOGGER_NAME)
    if not root.handlers:
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter("[%(levelname)s] %(name)s: %(message)s"))
        root.addHandler(handler)
        root.setLevel(get_settings().log_level)
        root.propagate = False

    if name.startswith("src."):
        name = name[len("src."):]
    return root.getChild(name)
