"""A desk-scale simulator of an event camera to spiking network to PWM pipeline."""
from colibri_py.dvs_env import DvsEnv
from colibri_py.event_core import EventFrame
from colibri_py.dvs_model import DvsSensor
from colibri_py.snn_engine import SnnNetwork
from colibri_py.scenario import load_scenario

# explicitly define the outward facing API of this package
__all__ = [
    DvsEnv.__name__,
    EventFrame.__name__,
    DvsSensor.__name__,
    SnnNetwork.__name__,
    load_scenario.__name__,
]
