from ._lyapnet import *  # noqa: F401,F403
from ._lyapnet import __doc__  # noqa: F401
