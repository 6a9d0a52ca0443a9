import logging

import pytest

from boostlab._log import ColorCode, ColoredFormatter, set_verbosity


def _record(level):
    return logging.LogRecord('boostlab', level, __file__, 1, 'message', None, None)


def test_every_color_is_used_by_a_level():
    fmt = ColoredFormatter('%(levelname)s %(message)s')
    used = set(fmt.color_codes.values()) | {ColorCode.RESET, ColorCode.BOLD}
    assert used == set(ColorCode)


@pytest.mark.parametrize('level, color', [
    (logging.ERROR, ColorCode.RED),
    (logging.WARNING, ColorCode.YELLOW),
    (logging.INFO, ColorCode.WHITE),
    (logging.DEBUG, ColorCode.GRAY),
])
def test_colored_level_names(level, color):
    out = ColoredFormatter('%(levelname)s %(message)s').format(_record(level))
    assert out.startswith(ColorCode.BOLD.value + color.value)
    assert out.endswith(ColorCode.RESET.value + ' message')


def test_plain_level_names():
    fmt = ColoredFormatter('%(levelname)s|%(message)s', color=False)
    assert fmt.format(_record(logging.WARNING)) == 'WARNING |message'


def test_verbosity_steps():
    try:
        assert set_verbosity(verbose=1) == logging.DEBUG
        assert set_verbosity(quiet=2) == logging.ERROR
        assert set_verbosity(quiet=9) == logging.CRITICAL
    finally:
        set_verbosity()
