__version__ = "0.1.0"

from . import abstract as abstract
from . import analytics as analytics
from . import channel as channel
from . import cli as cli
from . import csi as csi
from . import montecarlo as montecarlo
from . import schemes as schemes
from . import symbols as symbols
from . import utils as utils
