#!/usr/bin/env python

from PyUADRL._version import __version__

from setuptools import setup, find_packages


with open('README.rst', 'rb') as f:
    long_description = f.read().decode('utf-8')


setup(
    name='PyUADRL',
    version=__version__,
    description='Uncertainty-decomposed distributional reinforcement '
        'learning: anchored quantile-regression ensembles separating '
        'epistemic from aleatoric uncertainty on tabular MDPs.',
    packages=find_packages(exclude=['PyUADRL.testing*']),
    long_description=long_description,
    include_package_data=True,
    python_requires='>=3.8',
    install_requires=[
        'numpy',
        'scipy',
        'h5py',
        'tomli; python_version < "3.11"',
    ],
    entry_points={
        'console_scripts': ['pyuadrl = PyUADRL.cli.main:main'],
    },
)
