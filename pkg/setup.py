"""
ACDNet PYPI setup file.

Install with: python3 setup.py install
Develop with: python3 setup.py develop
Test with: python3 -m unittest discover -s acdnet/tests -t .
"""

__author__ = "acdnet developers"
__license__ = "GPLv3"
__version__ = "0.1.0"

from setuptools import find_packages, setup

setup(
    name="acdnet",
    version=__version__,
    description="Medication recommendation from visit histories, medication graphs and molecules",
    author="acdnet developers",
    license="GNU v3.0",
    python_requires=">=3.8",
    install_requires=[
        "jinja2>=3.0",
        "jsonschema>=3.2.0",
        "numpy>=1.22",
        "PyYAML>=5.4",
        "scikit-learn>=1.0",
        "scipy>=1.8",
    ],
    packages=find_packages(exclude=["examples", "examples.*"]),
    include_package_data=True,
    package_data={"acdnet": ["tests/cases/*/*.yml"]},
    zip_safe=False,
    entry_points={
        "console_scripts": [
            "acdnet=acdnet.cli:main",
        ],
    },
    classifiers=[
        "Programming Language :: Python",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3 :: Only",
    ],
)
