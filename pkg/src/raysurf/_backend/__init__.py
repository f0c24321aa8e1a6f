"""Kernel backend selection.

The compiled Cython core is used when its extension module imported
successfully; otherwise the pure NumPy/Python fallback takes over.  Both
expose the same three entry points (``build_tree``, ``batch_query``,
``batch_baseline``) and produce bit-identical outputs.  Set
``RAYSURF_BACKEND=pure`` (or ``compiled``) to force a choice.
"""

from __future__ import annotations

import os

from ..exceptions import ValidationError
from . import _pure

try:
    from . import _compiled
except ImportError:
    _compiled = None

_BACKENDS = {"pure": _pure}
if _compiled is not None:
    _BACKENDS["compiled"] = _compiled


def available_backends() -> tuple[str, ...]:
    return tuple(sorted(_BACKENDS))


def default_backend_name() -> str:
    forced = os.environ.get("RAYSURF_BACKEND")
    if forced:
        if forced not in _BACKENDS:
            raise ValidationError(
                f"RAYSURF_BACKEND={forced!r} is not available "
                f"(have: {', '.join(available_backends())})"
            )
        return forced
    return "compiled" if "compiled" in _BACKENDS else "pure"


def get_backend(name: str | None = None):
    if name is None:
        name = default_backend_name()
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValidationError(
            f"unknown backend {name!r} (have: {', '.join(available_backends())})"
        ) from None
