"""The interface comparison and closed-loop budget tables as CSV."""
from typing import Any
from typing import List
from typing import TextIO

from colibri_py.saer_codec import ClockConfig
from colibri_py.saer_codec import Interface
from colibri_py.saer_codec import InterfaceParams
from colibri_py.saer_codec import fetch_time_s
from colibri_py.saer_codec import interface_power_mw
from colibri_py.saer_codec import interface_throughput_efps
from colibri_py.pipeline_budget import default_budget
from colibri_py.pipeline_budget import write_budget_csv
from colibri_py._csv import write_csv


# the power cell of hosts drawing watts
WATT_CLASS = '>1000'


def interface_rows(params: InterfaceParams = InterfaceParams()) -> List[List[Any]]:
    """
    Return the interface comparison for fully populated frames.

    Args:
        params: the interface parameters

    Returns:
        one (interface, efps, power_mw, fetch_time_s) row per interface, the
        fetch time covering one second of frames at the sample rate

    """
    frames = int(params.sample_rate_hz)
    rows = []
    for interface in (Interface.USB, Interface.SAER_FPGA, Interface.SAER_COLIBRI):
        power = interface_power_mw(interface, params)
        rows.append([
            interface.value,
            interface_throughput_efps(interface, params),
            WATT_CLASS if power is None else power,
            fetch_time_s(interface, frames, params),
        ])
    return rows


INTERFACE_COLUMNS = ('interface', 'efps', 'power_mw', 'fetch_time_s')


def write_interface_table(stream: TextIO) -> None:
    """Write the interface comparison at the default parameters."""
    write_csv(stream, INTERFACE_COLUMNS, interface_rows())


def write_closed_loop_table(stream: TextIO) -> None:
    """Write the single frame row, the default budget stages, and their total."""
    write_budget_csv(stream, default_budget(), ClockConfig())


TABLES = {
    'interface': write_interface_table,
    'closed_loop': write_closed_loop_table,
}


def write_table(stream: TextIO, table_id: str) -> None:
    """Write one of TABLES as CSV."""
    if table_id not in TABLES:
        raise ValueError('unknown table {!r}, valid tables are: {}.'.format(table_id, ', '.join(TABLES)))
    TABLES[table_id](stream)


# explicitly define the outward facing API of this module
__all__ = [interface_rows.__name__, write_table.__name__]
