# Expose to root
from ._errors import *
del _errors

from ._log import *
del _log

from ._time import *
del _time

from ._model import *
del _model

from ._equilibria import *
del _equilibria

from ._controllers import *
del _controllers

from ._observer import *
del _observer

from ._sim import *
del _sim

from ._analysis import *
del _analysis

from ._config import *
del _config

from ._presets import *
del _presets

# Export submodules
from . import _plot as plot
from . import _cli as cli

from ._version import __version__
del _version
