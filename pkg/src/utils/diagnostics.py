# src/utils/diagnostics.py
from __future__ import annotations
from typing import Any, Iterable, Callable, TypeAlias
from collections import Counter

from src.utils.console import debug as _debug_out, warn as _warn_out

Logger: TypeAlias = Callable[[str], None]

def _noop(*args, **kwargs) -> None:
    pass

def debug_switch(
    cfg: dict[str, Any],
    domain_path: Iterable[str],
    key: str
) -> bool:
    """
    Look up cfg[domain...][key]; a missing hop or a non-dict node means off.
    """
    node: Any = cfg
    for hop in domain_path:
        node = node.get(hop) if isinstance(node, dict) else None
    return isinstance(node, dict) and bool(node.get(key, False))

def build_debug_logger(
    *,
    domain_path: Iterable[str] | str,
    key: str,
    cfg: dict[str, Any],
) -> Logger:
    """
    Returns a logger bound to one debug switch, or a no-op when the switch is off.
    Example:
    - _dbg = build_debug_logger(cfg=DEBUG_CONFIG, domain_path="gbp.graph", key="print_singular")
    - _dbg(f"factor {fid}: singular marginal")
    """
    hops = domain_path.split(".") if isinstance(domain_path, str) else list(domain_path)

    if not debug_switch(cfg, hops, key):
        return _noop

    domain = ".".join(hops)
    return lambda msg: _debug_out(domain, msg)

def merge_counters(counters: Iterable[Counter]) -> dict[str, int]:
    """
    Sum per-robot incident counters into a plain dict with sorted keys (stable JSON).
    """
    total: Counter = Counter()
    for c in counters:
        total.update(c)

    return {key: int(total[key]) for key in sorted(total)}

def warn(domain: str, message: str) -> None:
    _warn_out(domain, message)
