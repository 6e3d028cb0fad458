"""Random linear network coding on a simulated programmable switch."""
from .codec import CodingParams
from .codec import decoder_consume
from .codec import decoder_recover
from .codec import encode
from .codec import recode
from .gf256 import build_context
from .gf256 import default_context
from .simnet import Scenario
from .simnet import run
from .simnet import run_scenario
from .simnet import sweep
from .switch import SwitchConfig
from .switch import new_switch

__version__ = "0.1.0"
