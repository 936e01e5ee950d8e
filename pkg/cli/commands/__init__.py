"""
CLI Subcommands
===============
One module per subcommand, each exposing HELP, add_arguments(parser)
and handle(args) -> exit code.
"""

from collections import OrderedDict

from . import btspec, compare, eig, mesh_info, run, signal, sta

COMMANDS = OrderedDict([
    ("mesh-info", mesh_info),
    ("eig", eig),
    ("signal", signal),
    ("compare", compare),
    ("btspec", btspec),
    ("sta", sta),
    ("run", run),
])

__all__ = ["COMMANDS"]
