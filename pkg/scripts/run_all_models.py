#!/usr/bin/env python3
"""Drive every bundled experiment config through the CLI."""

import pathlib
import sys

from schrodingerizer.cli import main

HERE = pathlib.Path(__file__).resolve().parent

if __name__ == "__main__":
    for config in sorted((HERE / "configs").glob("*.json")):
        if config.stem == "estimate_heat":
            code = main(["estimate", "--query", str(config)])
        else:
            code = main(["run", "--config", str(config)])
        status = "ok" if code == 0 else f"exit {code}"
        print(f"{config.stem}: {status}")
        if code != 0:
            sys.exit(code)
