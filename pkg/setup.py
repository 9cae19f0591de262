#! /usr/bin/env python3
"""Installations script."""

from setuptools import setup


setup(
    name="photoemit",
    use_scm_version=True,
    setup_requires=["setuptools_scm"],
    python_requires=">=3.10",
    packages=["photoemit"],
    install_requires=[
        "mpmath",
        "numpy",
        "scipy",
        'tomli; python_version < "3.11"',
    ],
    entry_points={"console_scripts": ["photoemit = photoemit.cli:main"]},
    description="Exact one-dimensional photoemission from a metal surface.",
)
