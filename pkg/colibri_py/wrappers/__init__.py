"""Wrappers for altering the action space of the sensor environment."""
from colibri_py.wrappers.pwm_space import PwmSpace


# explicitly define the outward facing API of this package
__all__ = [PwmSpace.__name__]
