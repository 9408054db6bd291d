"""
Entry point for running overlap-lab as a module
Enables running with: python -m overlap_lab
"""

from .cli import cli_main

if __name__ == "__main__":
    cli_main()
