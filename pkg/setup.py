"""Setup configuration for the qeilab package."""

from setuptools import setup, find_packages

setup(
    name="qeilab",
    version="0.1.0",
    packages=find_packages(exclude=["tests", "tests.*", "examples", "examples.*"]),
    install_requires=[
        "numpy>=1.24.0",
        "scipy>=1.11.4",
        "matplotlib>=3.7.0",
        "python-dotenv>=1.0.0",
    ],
    extras_require={
        "test": [
            "pytest>=7.4.0",
            "pytest-mock>=3.11.1",
            "pytest-cov>=4.1.0",
        ],
    },
    entry_points={
        "console_scripts": [
            "qeilab=src.cli.main:main",
        ],
    },
    python_requires=">=3.10",
    description="Numerical laboratory for quantum energy inequalities, nuclearity and negative-energy states",
    keywords="quantum energy inequality, nuclearity, free fields, quadrature",
)
