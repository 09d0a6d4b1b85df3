# Sphinx configuration for the cmcs API reference.

import os
import sys

sys.path.insert(0, os.path.abspath('..'))

from cmcs import __version__  # noqa: E402

project = 'cmcs'
copyright = '2026, CMCS developers'
author = 'CMCS developers'
release = __version__

extensions = [
    'sphinx.ext.autodoc',
    'sphinx.ext.napoleon',
]
autodoc_member_order = 'bysource'
autodoc_typehints = 'description'

templates_path = ['_templates']
exclude_patterns = ['_build', 'Thumbs.db', '.DS_Store']

html_theme = 'furo'
html_title = 'cmcs'
html_static_path = ['_static']
