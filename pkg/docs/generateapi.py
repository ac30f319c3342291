"""
Writes one API page per job package and one per library module.
"""

import os

PACKAGE = "dressing_core"
# packages without jobs or library code
SKIPPED = {"docs", "tests", "examples", "__pycache__"}


def _page(directory, name, modules, title):
    """
    :param str directory: output directory
    :param str name: file name without extension
    :param list[str] modules: dotted module names documented on the page
    :param str title:
    """
    path = os.path.join(directory, "%s.rst" % name)
    if os.path.exists(path):
        return
    with open(path, "wt") as f:
        f.write("%s\n%s\n\n" % (title, "=" * len(title)))
        for module in modules:
            f.write(".. automodule:: %s\n   :members:\n\n" % module)


def _python_modules(path):
    return sorted(
        os.path.splitext(fn)[0]
        for fn in os.listdir(path)
        if fn.endswith(".py") and fn != "__init__.py"
    )


def generate(directory, root=None):
    """
    :param str directory: where the .rst pages are written
    :param str|None root: package root, the parent of this file's directory if None
    """
    root = root or os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
    os.makedirs(directory, exist_ok=True)

    lib = os.path.join(root, "lib")
    for module in _python_modules(lib):
        _page(
            directory,
            "lib.%s" % module,
            ["%s.lib.%s" % (PACKAGE, module)],
            ":mod:`lib.%s`" % module,
        )

    for fn in sorted(os.listdir(root)):
        path = os.path.join(root, fn)
        if fn in SKIPPED or fn == "lib" or not os.path.isdir(path):
            continue
        if not os.path.exists(os.path.join(path, "__init__.py")):
            continue
        modules = ["%s.%s.%s" % (PACKAGE, fn, m) for m in _python_modules(path)]
        _page(directory, fn, modules, "%s jobs" % fn)

    _page(
        directory,
        "toplevel",
        ["%s.%s" % (PACKAGE, m) for m in _python_modules(root)],
        "command line and utilities",
    )
