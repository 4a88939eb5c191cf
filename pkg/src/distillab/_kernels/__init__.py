"""Hot-kernel selection: compiled Cython core when available, numpy
fallback otherwise. Set DISTILLAB_PURE=1 to force the fallback (used by
the benchmark to compare both).
"""
import os

from . import _pure


def _load():
    if os.environ.get("DISTILLAB_PURE"):
        return _pure, False
    try:
        from . import _core

        return _core, True
    except ImportError:
        return _pure, False


_impl, USING_EXTENSION = _load()

kendall_signed_many = _impl.kendall_signed_many
kendall_paper_many = _impl.kendall_paper_many
