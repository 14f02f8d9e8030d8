"""PEP 517 backend: setuptools, without executing the repo's setup.py.

setup.py in this repo is a dependency-installer script (see README), not a
setuptools configuration, so package metadata lives in pyproject.toml.
"""
from setuptools import build_meta as _bm
from setuptools.build_meta import *  # noqa: F401,F403


class _Backend(_bm._BuildMetaBackend):
    def run_setup(self, setup_script="setup.py"):
        from setuptools import setup

        setup()


_backend = _Backend()
get_requires_for_build_wheel = _backend.get_requires_for_build_wheel
get_requires_for_build_sdist = _backend.get_requires_for_build_sdist
prepare_metadata_for_build_wheel = _backend.prepare_metadata_for_build_wheel
build_wheel = _backend.build_wheel
build_sdist = _backend.build_sdist
get_requires_for_build_editable = _backend.get_requires_for_build_editable
prepare_metadata_for_build_editable = _backend.prepare_metadata_for_build_editable
build_editable = _backend.build_editable
