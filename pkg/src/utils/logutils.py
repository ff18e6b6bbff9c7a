# src/utils/logutils.py
import logging
import os
import sys

# ----------------- GLOBAL LOG LEVEL -----------------
LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")

# ----------------- COLORS -----------------
RESET = "\033[0m"
BOLD = "\033[1m"

RED = "\033[91m"
GREEN = "\033[92m"
YELLOW = "\033[93m"
BLUE = "\033[94m"
MAGENTA = "\033[95m"
CYAN = "\033[96m"

# ----------------- ICONS -----------------
ICONS = {
    "lab": "🧪",
    "wave": "🌊",
    "sample": "📥",
    "step": "⏱️",
    "blowup": "💥",
    "oracle": "📐",
    "fit": "📈",
    "report": "💾",
    "ok": "✅",
    "skip": "⚪",
    "warn": "⚠️",
    "err": "❌",
    "scan": "📂",
    "result": "➡️",
}

_LEVELS = {"DEBUG": logging.DEBUG, "INFO": logging.INFO, "WARNING": logging.WARNING}


def _formatter(level: str) -> logging.Formatter:
    if level.upper() == "DEBUG":
        # DEBUG → SHOW module name + level
        return logging.Formatter("%(levelname)s [%(name)s]: \t %(message)s")
    # CLEAN OUTPUT (no module, no level)
    return logging.Formatter("%(message)s")


# ----------------- LOGGER FACTORY -----------------
def get_logger(name: str) -> logging.Logger:
    logger = logging.getLogger(name)

    # Avoid duplicated handlers
    if logger.handlers:
        return logger

    handler = logging.StreamHandler(sys.stdout)
    handler.setFormatter(_formatter(LOG_LEVEL))

    logger.setLevel(_LEVELS.get(LOG_LEVEL.upper(), logging.INFO))
    logger.addHandler(handler)
    logger.propagate = False

    return logger


def set_level(level: str) -> None:
    """
    Switch every logger created by get_logger to a new level (used by the CLI flag).
    """
    global LOG_LEVEL
    LOG_LEVEL = level.upper()
    for logger in logging.Logger.manager.loggerDict.values():
        if not isinstance(logger, logging.Logger) or not logger.handlers:
            continue
        logger.setLevel(_LEVELS.get(LOG_LEVEL, logging.INFO))
        for handler in logger.handlers:
            handler.setFormatter(_formatter(LOG_LEVEL))


# ----------------- HELPERS -----------------
def color(text: str, c: str) -> str:
    return f"{c}{text}{RESET}"


def bold(text: str) -> str:
    return f"{BOLD}{text}{RESET}"


def indent(text: str, level: int = 1) -> str:
    return "   " * level + text
