#!/usr/bin/env python3
"""
Convenience script to run a full experiment from run_config.json
"""

import os
import sys

# Add the current directory to Python path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from graph_prompt_cli import main

if __name__ == "__main__":
    config = sys.argv[1] if len(sys.argv) > 1 else "run_config.json"
    out = sys.argv[2] if len(sys.argv) > 2 else "report"
    sys.exit(main(["run", "--config", config, "--out", out]))
