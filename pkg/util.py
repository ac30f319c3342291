import contextlib
import gzip
import os
import tempfile


def uncached_path(path):
    """
    Resolves plain strings, ``os.PathLike`` objects and Sisyphus paths to a filesystem path
    without importing Sisyphus.

    :param str|os.PathLike|tk.Path path:
    :rtype: str
    """
    if hasattr(path, "get_path"):
        return path.get_path()
    return os.fspath(path)


def uopen(path, *args, **kwargs):
    path = uncached_path(path)
    if path.endswith(".gz"):
        return gzip.open(path, *args, **kwargs)
    else:
        return open(path, *args, **kwargs)


@contextlib.contextmanager
def atomic_write(path, mode="wt", encoding="utf-8"):
    """
    Opens a temporary file next to ``path`` and renames it onto ``path`` once the block
    finished without an exception, so readers never see a half-written file.

    :param str|tk.Path path: target file
    :param str mode: "wt" or "wb"
    :param str encoding: only used for text mode
    """
    path = uncached_path(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp_path = tempfile.mkstemp(
        dir=directory, prefix=".%s." % os.path.basename(path), suffix=".tmp"
    )
    os.close(fd)
    try:
        if path.endswith(".gz"):
            f = gzip.open(tmp_path, mode, encoding=None if "b" in mode else encoding)
        elif "b" in mode:
            f = open(tmp_path, mode)
        else:
            f = open(tmp_path, mode, encoding=encoding, newline="\n")
        with f:
            yield f
        os.replace(tmp_path, path)
    finally:
        delete_if_exists(tmp_path)


def delete_if_exists(file):
    if os.path.exists(file):
        os.remove(file)

