#!/usr/bin/env python3
"""Check if the lab's required packages are installed"""

import sys

packages = {
    'gmpy2': 'gmpy2 (exact big integers and rationals)',
    'sympy': 'SymPy (primality, factorisation)',
    'mpmath': 'mpmath (high-precision sums and logs)',
    'numpy': 'NumPy (sieves, least-squares fits)',
    'click': 'click (command line)',
    'dotenv': 'python-dotenv',
    'pytest': 'pytest',
}

print("Checking installed packages...")
print("=" * 50)

all_installed = True
for package, name in packages.items():
    try:
        module = __import__(package)
        print(f"OK {name} {getattr(module, '__version__', '')}".rstrip())
    except ImportError:
        print(f"FAIL {name} is NOT installed")
        all_installed = False

print("=" * 50)

if all_installed:
    print("\nSUCCESS: All packages are installed!")
    print("You can now run: python bfree_lab.py --help")
else:
    print("\nERROR: Some packages are missing.")
    print("\nInstall them with: pip install -r requirements.txt")
    print("gmpy2 needs GMP/MPFR; on Debian/Ubuntu: apt install libgmp-dev libmpfr-dev libmpc-dev")

sys.exit(0 if all_installed else 1)
