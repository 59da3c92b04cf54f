from ._orbimorse import *  # noqa: F401,F403
from ._orbimorse import __version__  # noqa: F401
