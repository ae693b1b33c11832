"""
Command-line entry point for CA-trace backmapping.

Usage:
    python run_backmap.py fetch PED00151 --out data/
    python run_backmap.py preprocess data/PED00151.pdb data/PED00151.clean.pdb
    python run_backmap.py fit data/*.clean.pdb --model model.json --train-net
    python run_backmap.py backmap trace.pdb model.json out.pdb --mode stochastic --seed 7
    python run_backmap.py eval reference.pdb out.pdb --report metrics.json
"""
import sys
from pathlib import Path

# Add parent directory to path for imports
sys.path.insert(0, str(Path(__file__).parent))

from cli import main

if __name__ == "__main__":
    main()
