#!/usr/bin/env python
"""
Installation check for epsilon-kit.
This script verifies that all components are in place and computes one set.
"""

import os
import sys
import importlib
import platform


def print_status(component, status, message=""):
    """Print the status of a component."""
    status_str = "✓" if status else "✗"
    print(f"{status_str} {component:<30} {message}")


def test_python_version():
    """Test Python version."""
    version = platform.python_version()
    status = sys.version_info >= (3, 8)
    message = f"Version: {version}" + (" (3.8+ required)" if not status else "")
    print_status("Python Version", status, message)
    return status


def test_dependency(name):
    """Test if a dependency is installed."""
    try:
        module = importlib.import_module(name)
        version = getattr(module, "__version__", "unknown")
        print_status(name, True, f"Version: {version}")
        return True
    except ImportError:
        print_status(name, False, "Not installed")
        return False


def test_file_exists(path, name):
    """Test if a file exists."""
    full_path = os.path.join(os.path.dirname(__file__), path)
    status = os.path.exists(full_path)
    message = f"Path: {full_path}"
    print_status(name, status, message)
    return status


def test_smoke_computation():
    """The 1-subdifferential of -sqrt at 0 is (-inf, -1/4]."""
    try:
        from src.functions import NegSqrt1D
        from src.subdiff import EpsSubdiffQuery, eps_subdiff_set

        interval = eps_subdiff_set(EpsSubdiffQuery(NegSqrt1D(), [0.0], 1.0)).interval()
        status = interval.lo == float("-inf") and abs(interval.hi + 0.25) < 5e-3
        print_status("Smoke computation", status, f"Result: {interval}")
        return status
    except Exception as e:
        print_status("Smoke computation", False, f"Error: {str(e)}")
        return False


def main():
    """Main test function."""
    print("=" * 60)
    print("epsilon-kit - Installation Test")
    print("=" * 60)

    # Test Python version
    python_status = test_python_version()

    # Test dependencies
    print("\nTesting dependencies:")
    dependency_status = all([
        test_dependency(name)
        for name in ("numpy", "scipy", "pandas", "matplotlib", "networkx", "sklearn", "pytest", "hypothesis")
    ])

    # Test file structure
    print("\nTesting file structure:")
    file_status = all([
        test_file_exists("run.py", "Run Script"),
        test_file_exists("app_config.py", "Configuration"),
        test_file_exists("src/operation_types.json", "Operation Types"),
        test_file_exists("src/cli.py", "Scenario Runner"),
        test_file_exists("src/visualization.py", "Visualization Module"),
        test_file_exists("requirements.txt", "Requirements File"),
        test_file_exists("README.md", "README File"),
    ])

    # Test fixtures
    print("\nTesting bundled fixtures:")
    fixture_status = all([
        test_file_exists("fixtures/neg_sqrt_boundary.json", "Boundary subdifferential"),
        test_file_exists("fixtures/shifted_ball_polar.json", "Shifted ball polar"),
        test_file_exists("fixtures/cone_graph_value.json", "Constrained value function"),
    ])

    # Smoke computation
    print("\nTesting a computation:")
    smoke_status = dependency_status and test_smoke_computation()

    overall_status = python_status and dependency_status and file_status and smoke_status

    # Print summary
    print("\n" + "=" * 60)
    print("Test Summary:")
    print(f"Python Version: {'OK' if python_status else 'FAILED'}")
    print(f"Dependencies: {'OK' if dependency_status else 'FAILED'}")
    print(f"File Structure: {'OK' if file_status else 'FAILED'}")
    print(f"Fixtures: {'OK' if fixture_status else 'WARNING'}")
    print(f"Smoke Computation: {'OK' if smoke_status else 'FAILED'}")
    print("-" * 60)
    print(f"Overall Status: {'OK' if overall_status else 'FAILED'}")

    if not fixture_status:
        print("\nWarning: some bundled fixtures are missing; the suite will run the ones present.")

    if not overall_status:
        print("\nSome tests failed. Please fix the issues before using epsilon-kit.")
        print("You can run setup.py to install dependencies and create the required directories.")
    else:
        print("\nAll critical tests passed!")
        print("To run the fixture suite, run: python run.py suite")

    print("=" * 60)

    return overall_status


if __name__ == "__main__":
    sys.exit(0 if main() else 1)
