"""
Entry point for running T2T as a module.
"""
from .cli import main

if __name__ == "__main__":
    main()
