project = 'nqsot documentation'
copyright = '2026, the nqsot authors'
author = 'the nqsot authors'
templates_path = ['_templates']
html_theme = 'sphinx_rtd_theme'
# Don't highlight by default
highlight_language = 'none'
master_doc = 'index'
