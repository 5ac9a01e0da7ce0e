#!/usr/bin/env python3
"""
Setup script for trimshell (trimmed isogeometric shell dynamics)
"""

from setuptools import find_packages, setup

with open("README.md", "r", encoding="utf-8") as fh:
    long_description = fh.read()

# Dependencies are managed in pyproject.toml; this list mirrors it
requirements = [
    "numpy>=1.20.0",
    "networkx>=2.6",
    "scipy>=1.12",
    "shapely>=2.0.7",
    "mapbox-earcut>=1.0.1",
    "pandas>=2.0.3",
    "sympy>=1.10",
]

setup(
    name="trimshell",
    author="Jordan Fox",
    author_email="jmrfox@example.com",
    description="Explicit dynamics of trimmed isogeometric Reissner-Mindlin shells",
    long_description=long_description,
    long_description_content_type="text/markdown",
    url="https://github.com/jmrfox/trimshell",
    packages=find_packages(include=["trimshell", "trimshell.*"]),
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "Topic :: Scientific/Engineering :: Mathematics",
        "License :: OSI Approved :: MIT License",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
    ],
    python_requires=">=3.9",
    install_requires=requirements,
    extras_require={
        "dev": [
            "pytest>=6.0",
            "pytest-cov",
            "hypothesis>=6.0",
            "black",
            "flake8",
            "mypy",
        ],
    },
    entry_points={
        "console_scripts": [
            "trimshell=trimshell.cli:main",
        ],
    },
)
