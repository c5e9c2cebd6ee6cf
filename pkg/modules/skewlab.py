#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
# Skew Product Laboratory project 2026
# GNU General Public License v3.0

# Command-line interface of the laboratory:
#       python -m modules.skewlab <subcommand> [--config PATH] [--seed U64] [--steps N] [--samples K]
#                                 [--grid-bins M] [--cyl-depth D] [--out DIR] [--format csv|json] [--quiet]
# Errors are printed to stdout as one JSON object; the exit status is 2 for configuration
# errors, 1 for any other error and 0 on success.

import sys
import json
import argparse

from modules.laboratory import SUBCOMMANDS, Laboratory, resolve_config, ConfigError


class LabArgumentParser(argparse.ArgumentParser):
    """ ArgumentParser reporting bad arguments as ConfigError instead of exiting """

    def error(self, message):
        raise ConfigError(f"Invalid arguments: {message}")


class SkewLab:
    """
    CLI Laboratory Interface
    """

    def __init__(self, argv=None):
        """
        Parses the command line and runs the requested experiment
        :param argv: list of arguments, sys.argv[1:] when None
        """
        parser = LabArgumentParser(prog="skewlab",
                                   description="Numerical laboratory for step skew products")
        parser.add_argument("subcommand", help=f"experiment to run: {', '.join(SUBCOMMANDS)}")
        parser.add_argument("--config", help="provide the JSON configuration filepath")
        parser.add_argument("--seed", type=int, help="64-bit seed of every random choice")
        parser.add_argument("--steps", type=int, help="orbit length N")
        parser.add_argument("--samples", type=int, help="ensemble size K")
        parser.add_argument("--grid-bins", type=int, dest="bins", help="number of fiber bins m")
        parser.add_argument("--cyl-depth", type=int, dest="cyl_depth", help="cylinder depth d of the cell grid")
        parser.add_argument("--out", help="output directory")
        parser.add_argument("--format", help="table format: csv or json")
        parser.add_argument("--quiet", action="store_true", help="disable the laboratory log")

        args = parser.parse_args(argv)
        self.subcommand = args.subcommand

        if args.subcommand not in SUBCOMMANDS:
            raise ConfigError(f"Unknown subcommand: {args.subcommand}")

        user_config = dict()
        if args.config:
            try:
                with open(args.config, "r") as file:
                    user_config = json.load(file)
            except OSError as error:
                raise ConfigError(f"Can not read the configuration: {error}")
            except json.JSONDecodeError as error:
                raise ConfigError(f"The configuration is not valid JSON: {error}")
            if not isinstance(user_config, dict):
                raise ConfigError("The configuration has to be a JSON object")

        overrides = {"seed": args.seed, "steps": args.steps, "samples": args.samples, "bins": args.bins,
                     "cyl_depth": args.cyl_depth, "out": args.out, "format": args.format}
        config = resolve_config(user_config, overrides)
        self.report = Laboratory(args.subcommand, config, debug_mode=not args.quiet).run()


def main(argv=None):
    """
    Runs the CLI, reporting errors as JSON
    :return: int - exit status
    """
    argv = sys.argv[1:] if argv is None else list(argv)
    subcommand = argv[0] if argv and not argv[0].startswith("-") else None
    try:
        laboratory = SkewLab(argv)
        print(json.dumps({"subcommand": subcommand, "out": laboratory.report["config"]["out"],
                          "artifacts": laboratory.report["artifacts"]}))
        return 0
    except ConfigError as error:
        print(json.dumps({"error": type(error).__name__, "message": str(error), "subcommand": subcommand}))
        return 2
    except Exception as error:
        print(json.dumps({"error": type(error).__name__, "message": str(error), "subcommand": subcommand}))
        return 1


if __name__ == '__main__':
    sys.exit(main())
