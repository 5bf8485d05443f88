"""
Setup script for ee-models.
This file is maintained for compatibility with older tools.
For modern Python packaging, see pyproject.toml.
"""

from setuptools import setup, find_packages

# Metadata and dependencies are primarily managed in pyproject.toml
# This file exists for compatibility with tools that don't support pyproject.toml

setup(
    name="ee-models",
    version="0.1.0",
    packages=find_packages(where="src"),
    package_dir={"": "src"},
    python_requires=">=3.10",
    install_requires=[
        "pydantic>=2.0.0,<3.0.0",
        "numpy>=1.24",
        "scipy>=1.11",
        "pandas>=2.0",
        "shapely>=2.1",
        "networkx>=3.0",
        "click>=8.1",
    ],
    extras_require={
        "dev": [
            "pytest>=7.0.0,<8.0.0",
            "black>=23.0.0,<24.0.0",
            "mypy>=1.0.0,<2.0.0",
            "ruff>=0.1.0,<0.2.0",
            "pandas-stubs>=2.0",
        ],
    },
    entry_points={
        "console_scripts": [
            "ee-models=ee_models.cli:main",
        ],
    },
    author="Kevin",
    author_email="kevin@example.com",
    description=(
        "Endemic-epidemic models for infectious disease surveillance data: "
        "point processes, SIR event histories and count time series"
    ),
    long_description=open("README.md").read(),
    long_description_content_type="text/markdown",
    license="MIT",
    keywords=["epidemiology", "point-process", "time-series", "surveillance", "hhh4", "twinstim"],
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Programming Language :: Python :: 3.12",
        "Topic :: Scientific/Engineering :: Mathematics",
    ],
    project_urls={
        "Homepage": "https://github.com/yourusername/ee-models",
        "Documentation": "https://github.com/yourusername/ee-models#readme",
        "Repository": "https://github.com/yourusername/ee-models.git",
        "Issues": "https://github.com/yourusername/ee-models/issues",
    },
)
