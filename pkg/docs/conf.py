# Sphinx configuration of the dressing-core documentation.
#
# The repository root is the package itself, so the build links it into a
# "dressing_core" directory next to this file before autodoc imports it.

import os
import sys

HERE = os.path.dirname(os.path.abspath(__file__))
PACKAGE_LINK = os.path.join(HERE, "dressing_core")

if not os.path.exists(PACKAGE_LINK):
    os.symlink(os.path.dirname(HERE), PACKAGE_LINK)

sys.path.insert(0, HERE)

import generateapi

generateapi.generate(os.path.join(HERE, "api"))

project = "dressing_core"
copyright = "2021, %s contributors" % project

extensions = [
    "sphinx.ext.autodoc",
    "sphinx.ext.mathjax",
    "sphinx.ext.intersphinx",
]

intersphinx_mapping = {
    "sisyphus": ("https://sisyphus-workflow-manager.readthedocs.io/en/latest/", None),
    "numpy": ("https://numpy.org/doc/stable/", None),
}

exclude_patterns = ["_build", "dressing_core"]

autoclass_content = "both"
# jobs pull in sisyphus at import time, the library only needs numpy and scipy
autodoc_mock_imports = ["sisyphus"]

if os.environ.get("READTHEDOCS") != "True":
    try:
        import sphinx_rtd_theme  # noqa: F401
    except ImportError:
        pass
    else:
        html_theme = "sphinx_rtd_theme"
