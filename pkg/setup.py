from setuptools import setup
import re

VERSION_FILE = "odflow/_version.py"
try:
    vers_content = open(VERSION_FILE, "r").read()
    version_str = re.search(r'__version__ = "(.+?)"', vers_content).group(1)
except:
    raise RuntimeError("Could not read version file.")

setup(
    name="odflow",
    version=version_str,
    description="Blind estimation of origin-destination flows from link "
                "flows",
    author="The odflow developers",
    packages=["odflow"],
    package_data={"odflow": ["data/*.txt"]},
    install_requires=[
        "numpy",
        "scipy",
        "networkx"
    ],
    extras_require={
        "test": ["cvxpy"]
    },
    entry_points={
        "console_scripts": ["odflow = odflow.cli:main"]
    },
    license="BSD License",
    classifiers=[
        'Intended Audience :: Science/Research',
        'Topic :: Scientific/Engineering :: Mathematics',

        'Programming Language :: Python',
        'Programming Language :: Python :: 3',
        'Programming Language :: Python :: 3.8',
        'Programming Language :: Python :: 3.9',
        'Programming Language :: Python :: 3.10',
        'Programming Language :: Python :: 3.11',
    ]
)
