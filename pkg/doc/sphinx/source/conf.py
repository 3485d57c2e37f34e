# -*- coding: utf-8 -*-
#
# l2r-pipeline documentation build configuration file.

import os
import sys
sys.path.insert(0, os.path.abspath('../../..'))

import l2r_pipeline

# -- General configuration ------------------------------------------------

extensions = ['sphinx.ext.autodoc',
    'sphinx.ext.githubpages']

templates_path = ['_templates']

source_suffix = '.rst'

master_doc = 'index'

project = u'l2r-pipeline'
copyright = l2r_pipeline.__copyright__
author = l2r_pipeline.__author__

version = l2r_pipeline.__version__
release = l2r_pipeline.__version__

language = 'en'

exclude_patterns = []

pygments_style = 'sphinx'

todo_include_todos = False


# -- Options for HTML output ----------------------------------------------

html_theme = 'classic'

html_static_path = ['_static']

htmlhelp_basename = 'l2rpipelinedoc'


# -- Options for manual page output ---------------------------------------

man_pages = [
    (master_doc, 'l2r-pipeline', u'l2r-pipeline Documentation',
     [author], 1)
]
