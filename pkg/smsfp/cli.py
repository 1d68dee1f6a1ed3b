"""
``python -m smsfp <subcommand> [options]``: the management commands without
``manage.py``.
"""

import os
import sys

import django
from django.core.management import load_command_class

SUBCOMMANDS = ("render", "decompose", "segment", "reconstruct", "evaluate", "sweep")

USAGE = f"usage: smsfp {{{','.join(SUBCOMMANDS)}}} [--config JSON] [--seed N] [--out DIR] [--verbose] ..."


def cli_main(argv=None):
    """Run one subcommand and return its exit status (0 ok, 1 failure, 2 bad input)."""
    argv = list(sys.argv[1:] if argv is None else argv)
    if not argv or argv[0] not in SUBCOMMANDS:
        unknown = f"unknown subcommand {argv[0]!r}\n" if argv else ""
        sys.stderr.write(f"{unknown}{USAGE}\n")
        return 2

    os.environ.setdefault("DJANGO_SETTINGS_MODULE", "sfp_project.settings")
    django.setup()
    command = load_command_class("smsfp", argv[0])
    try:
        command.run_from_argv(["smsfp", *argv])
    except SystemExit as exc:
        if exc.code is None:
            return 0
        return exc.code if isinstance(exc.code, int) else 1
    return 0
