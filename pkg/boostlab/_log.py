################################
# LOGGING : Colored log output #
################################
import os
import sys
import copy
import logging
from enum import Enum

__all__ = ['log', 'set_verbosity']


class ColorCode(Enum):
    """ Color Codes """
    RESET = '\033[00m'
    BOLD = '\033[01m'

    RED = '\033[31m'
    YELLOW = '\033[33m'
    WHITE = '\033[37m'
    GRAY = '\033[1;30m'


class ColoredFormatter(logging.Formatter):
    def __init__(self, msg, color=True, **kwargs):
        logging.Formatter.__init__(self, msg, **kwargs)
        self.color = color
        self.color_codes = {
            'CRITICAL': ColorCode.RED,
            'ERROR': ColorCode.RED,
            'WARNING': ColorCode.YELLOW,
            'INFO': ColorCode.WHITE,
            'DEBUG': ColorCode.GRAY,
        }

    def format(self, record):
        record = copy.copy(record)
        levelname = record.levelname
        if self.color and levelname in self.color_codes:
            color = self.color_codes[levelname]
            record.levelname = f'{ColorCode.BOLD.value}{color.value}{levelname:8}{ColorCode.RESET.value}'
        else:
            record.levelname = f'{levelname:8}'
        return logging.Formatter.format(self, record)

    def setColor(self, value):
        """ Enable or disable colored output for this handler """
        self.color = value


def _parse_level(value):
    value = str(value).upper()
    try:
        return int(value)
    except ValueError:
        return logging.getLevelName(value)


def _use_color(stream):
    if 'NO_COLOR' in os.environ:
        return False
    return hasattr(stream, 'isatty') and stream.isatty()


ch = logging.StreamHandler(sys.stderr)
ch.setFormatter(ColoredFormatter('{levelname} {message}', color=_use_color(sys.stderr), style='{'))
if 'BOOSTLAB_LOGLVL' in os.environ:
    ch.setLevel(_parse_level(os.environ['BOOSTLAB_LOGLVL']))
else:
    ch.setLevel(logging.INFO)


def _set_console_level(level):
    level = _parse_level(level)
    ch.setLevel(level)
    fmt = '{levelname} [{name}] {message}' if ch.level <= logging.DEBUG else '{levelname} {message}'
    ch.setFormatter(ColoredFormatter(fmt, color=ch.formatter.color, style='{'))


_set_console_level(ch.level)

log = logging.getLogger('boostlab')
log.setLevel(logging.DEBUG)
log.addHandler(ch)
log.propagate = False
log.setConsoleLevel = _set_console_level
log.setConsoleColor = lambda value: ch.formatter.setColor(value)


def set_verbosity(verbose=0, quiet=0):
    """
    Map command line ``-v`` / ``-q`` counts onto the console level.
    Every ``-v`` lowers the level by one step (INFO -> DEBUG), every ``-q`` raises it (INFO -> WARNING -> ERROR).

    Args:
        verbose (int):
            Number of times -v was given
        quiet (int):
            Number of times -q was given
    """
    level = logging.INFO + 10 * (quiet - verbose)
    level = min(max(level, logging.DEBUG), logging.CRITICAL)
    log.setConsoleLevel(level)
    return level
