# Sphinx configuration of the PyUADRL API documentation.
# Build with
#     sphinx-build -b html docsrc docs

import os
import sys

sys.path.insert(0, os.path.abspath('..'))

from PyUADRL._version import __version__  # noqa: E402


project = 'PyUADRL'
copyright = '2026, PyUADRL developers'
author = 'PyUADRL developers'
version = release = __version__

extensions = [
    'sphinx.ext.autodoc',
    'sphinx.ext.napoleon',
    'sphinx.ext.coverage',
    'sphinx.ext.mathjax',
]
# the package imports h5py at module level
autodoc_mock_imports = ['h5py']
autodoc_member_order = 'bysource'

language = 'en'
exclude_patterns = ['_build', 'Thumbs.db', '.DS_Store']

html_theme = 'nature'
