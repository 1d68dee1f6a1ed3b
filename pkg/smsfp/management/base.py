"""
Shared plumbing for the toolkit's management commands.

Every command takes ``--config``, ``--seed``, ``--out`` and ``--verbose``.
Invalid input ends the command with exit status 2, anything else that goes
wrong with status 1.
"""

import logging
from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from ..conf import cli_defaults, load_config
from ..exceptions import InvalidInputError

logger = logging.getLogger("smsfp.commands")


def float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise InvalidInputError(f"expected comma-separated numbers, got {text!r}") from exc


class SmsfpCommand(BaseCommand):
    requires_system_checks = []

    def add_arguments(self, parser):
        parser.add_argument("--config", help="JSON file overlaying the reconstruction defaults.")
        parser.add_argument("--seed", type=int, help="Seed for every random draw.")
        parser.add_argument("--out", help="Output directory.")
        parser.add_argument(
            "--verbose", action="store_true", help="Debug logging and per-iteration solver logs."
        )
        self.add_command_arguments(parser)

    def add_command_arguments(self, parser):
        pass

    def handle(self, *args, **options):
        defaults = cli_defaults()
        self.verbose = options["verbose"]
        if self.verbose:
            logging.getLogger("smsfp").setLevel(logging.DEBUG)
            logging.getLogger("smsfp.solver.iterations").setLevel(logging.DEBUG)
        self.seed = defaults["SEED"] if options["seed"] is None else options["seed"]
        self.out_dir = Path(options["out"] or defaults["OUT_DIR"])

        try:
            if self.seed < 0:
                raise InvalidInputError(f"seed must be non-negative, got {self.seed}")
            self.config = load_config(options["config"])
            self.execute_command(**options)
        except InvalidInputError as exc:
            raise CommandError(str(exc), returncode=2) from exc
        except CommandError:
            raise
        except Exception as exc:
            logger.exception("%s failed", self.__module__.rsplit(".", 1)[-1])
            raise CommandError(f"internal error: {exc}", returncode=1) from exc

    def execute_command(self, **options):
        raise NotImplementedError

    def done(self, message):
        self.stdout.write(self.style.SUCCESS(message))
