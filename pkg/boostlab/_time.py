###################################
# Code Time Execution Measurement #
###################################
import logging
from functools import wraps
from time import perf_counter_ns

__all__ = ['Time']
log = logging.getLogger(__name__)


class Time:
    """
    Measure wall-clock time of sweeps and simulation batches.
    You can use it in various different ways:
        - start() - stop() methods
        - contextmanager
        - function decorator

    Args:
        label (str):
            Label to use for logging the timer
        unit (s, ms, us or ns):
            Time unit
        level (int):
            Logging level of the timing message; Default **logging.DEBUG**

    Example:
        >>> with Time('appendix-a sweep') as t:
        ...     result = sweep_appendix_a(100000)
        >>> t.value   # doctest: +SKIP
        1.83

        >>> @Time('fig2')
        ... def run():
        ...     pass
    """
    _units = {
        's': 1e-9,
        'ms': 1e-6,
        'us': 1e-3,
        'ns': 1e0,
    }

    def __init__(self, label='time', unit='s', level=logging.DEBUG):
        self.label = label
        self.unit = unit if unit in self._units else 's'
        self.level = level
        self.value = None
        self._start = None

    def start(self):
        self.value = None
        self._start = perf_counter_ns()
        return self

    def stop(self):
        if self._start is None:
            raise RuntimeError('Time.stop() called before Time.start()')

        self.value = (perf_counter_ns() - self._start) * self._units[self.unit]
        self._start = None
        log.log(self.level, '%s: %.3f%s', self.label, self.value, self.unit)
        return self.value

    def __enter__(self):
        return self.start()

    def __exit__(self, ex_type, ex_value, trace):
        self.stop()
        return False

    def __call__(self, fn):
        @wraps(fn)
        def inner(*args, **kwargs):
            timer = Time(self.label if self.label != 'time' else fn.__name__, self.unit, self.level)
            with timer:
                return fn(*args, **kwargs)

        return inner
