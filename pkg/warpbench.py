"""Run the warpbench command line: python warpbench.py <command> [flags]."""
import sys

from src.harness.cli import cli_main

if __name__ == "__main__":
    sys.exit(cli_main())
