import sys
from pathlib import Path

# shared brute-force oracles live next to the tests
sys.path.insert(0, str(Path(__file__).parent))
