#!/usr/bin/env python
"""
Setup script for epsilon-kit.
This script helps users set up their environment and install the required dependencies.
"""

import os
import sys
import subprocess
import platform


def check_python_version():
    """Check if Python version is compatible."""
    print("Checking Python version...")
    if sys.version_info < (3, 8):
        print("Error: Python 3.8 or higher is required.")
        print(f"Current Python version: {platform.python_version()}")
        return False
    print(f"Python version {platform.python_version()} is compatible.")
    return True


def install_requirements():
    """Install required packages from requirements.txt."""
    print("Installing required packages...")
    requirements_path = os.path.join(os.path.dirname(__file__), "requirements.txt")

    if not os.path.exists(requirements_path):
        print(f"Error: requirements.txt not found at {requirements_path}")
        return False

    try:
        subprocess.check_call([sys.executable, "-m", "pip", "install", "-r", requirements_path])
        print("Successfully installed required packages.")
        return True
    except subprocess.CalledProcessError as e:
        print(f"Error installing packages: {str(e)}")
        return False


def create_reports_directory():
    """Create the report directory if it doesn't exist."""
    reports_dir = os.environ.get("EPSKIT_OUT_DIR") or os.path.join(os.path.dirname(__file__), "reports")
    if not os.path.exists(reports_dir):
        print("Creating reports directory...")
        os.makedirs(reports_dir)
        print(f"Created reports directory at {reports_dir}")
    else:
        print(f"Reports directory already exists at {reports_dir}")
    return True


def check_fixtures():
    """Check that the bundled scenario fixtures are present."""
    fixtures_dir = os.path.join(os.path.dirname(__file__), "fixtures")
    count = len([name for name in os.listdir(fixtures_dir) if name.endswith(".json")]) if os.path.isdir(fixtures_dir) else 0
    if count == 0:
        print(f"Warning: no scenario fixtures found in {fixtures_dir}")
        return False
    print(f"Found {count} scenario fixtures.")
    return True


def main():
    """Main setup function."""
    print("=" * 60)
    print("epsilon-kit Setup")
    print("=" * 60)

    # Check Python version
    if not check_python_version():
        return False

    # Install requirements
    if not install_requirements():
        return False

    # Create reports directory
    if not create_reports_directory():
        return False

    check_fixtures()

    print("\nSetup completed successfully!")
    print("\nTo run the fixture suite, run:")
    print("    python run.py suite")
    print("\nTo run the tests, run:")
    print("    pytest tests")
    print("=" * 60)
    return True


if __name__ == "__main__":
    sys.exit(0 if main() else 1)
