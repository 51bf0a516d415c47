"""
Setup check for the B-free approximation lab
Run this to verify the packages and configuration are in place; pytest collects it too
"""

import sys


def test_imports():
    """Every package the lab imports is installed"""
    print("Testing imports...")
    import gmpy2
    import sympy
    import mpmath
    import numpy
    import click
    import dotenv
    print(f"OK gmpy2 {gmpy2.version()}")
    print(f"OK sympy {sympy.__version__}")
    print(f"OK mpmath {mpmath.__version__}")
    print(f"OK numpy {numpy.__version__}")
    print("OK click, python-dotenv")


def test_big_integer_arithmetic():
    """gmpy2 handles the sizes the constructions reach"""
    print("\nTesting big integers...")
    from gmpy2 import mpq, mpz

    from exact_kernel import digit_count

    q = mpz(3) ** 262147
    assert digit_count(q) == 125076
    assert mpq(q, 3 * q) == mpq(1, 3)
    print("OK 3^262147 has 125076 digits")


def test_default_config():
    """The configuration loads with defaults when no file is present"""
    print("\nTesting configuration...")
    from lab_config import load_config

    config = load_config()
    assert config.threads >= 1
    assert config.digit_budget >= 1
    print(f"OK threads={config.threads} precision={config.precision} digit_budget={config.digit_budget}")


def main():
    """Run all checks"""
    print("=" * 70)
    print("  B-free Approximation Lab - Setup Check")
    print("=" * 70 + "\n")

    results = {}
    for name, check in [("imports", test_imports), ("big_integers", test_big_integer_arithmetic),
                        ("config", test_default_config)]:
        try:
            check()
            results[name] = True
        except Exception as e:
            print(f"FAIL {name}: {e}")
            results[name] = False

    print("\n" + "=" * 70)
    print("  CHECK SUMMARY")
    print("=" * 70 + "\n")

    for name, passed in results.items():
        print(f"{'PASS' if passed else 'FAIL'} - {name}")

    all_passed = all(results.values())
    print("\n" + "=" * 70)
    if all_passed:
        print("SUCCESS: The lab is ready.")
        print("\nNext steps:")
        print("1. Run: pytest")
        print("2. Run: python bfree_lab.py liouville build")
    else:
        print("ERROR: Some checks failed.")
        print("\nCommon fixes:")
        print("- Install missing packages: pip install -r requirements.txt")
        print("- Remove or fix bfree_lab.json / BFREE_LAB_* variables if the config fails to load")
    print("=" * 70 + "\n")

    return all_passed


if __name__ == "__main__":
    success = main()
    sys.exit(0 if success else 1)
