"""The main script for running the simulator as a module."""
import sys

from colibri_py.app.cli import main


# execute the main entry point of the CLI
sys.exit(main())
