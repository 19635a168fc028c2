#!/usr/bin/env python

import importlib
import inspect
from types import ModuleType
from typing import Any

__version__ = "0.1.0"

__all__: list[str] = []

CORE_MODULES: list[str] = [
    "sasaki_tube_verify.exceptions",
    "sasaki_tube_verify.scalar_expr",
    "sasaki_tube_verify.chart_geometry",
    "sasaki_tube_verify.verification_models",
    "sasaki_tube_verify.tangent_bundle",
    "sasaki_tube_verify.hermitian_analysis",
    "sasaki_tube_verify.tube_deformation",
    "sasaki_tube_verify.catalog",
]

# optional module -> availability flag
OPTIONAL_MODULES: dict[str, str] = {
    "sasaki_tube_verify.verification_suites": "_SUITES_AVAILABLE",
    "sasaki_tube_verify.reports": "_REPORTS_AVAILABLE",
    "sasaki_tube_verify.cli": "_CLI_AVAILABLE",
}

_loaded_optional_modules: dict[str, ModuleType] = {}


def _expose_members(module: ModuleType) -> None:
    """Publish the classes and functions a module defines itself."""
    for name, obj in inspect.getmembers(module, inspect.isclass):
        if not name.startswith("_") and obj.__module__ == module.__name__:
            globals()[name] = obj
            if name not in __all__:
                __all__.append(name)
    for name, obj in inspect.getmembers(module, inspect.isfunction):
        if not name.startswith("_") and obj.__module__ == module.__name__:
            globals()[name] = obj
            if name not in __all__:
                __all__.append(name)


for module_name in CORE_MODULES:
    _expose_members(importlib.import_module(module_name))


def _load_optional(module_name: str) -> ModuleType | None:
    if module_name in _loaded_optional_modules:
        return _loaded_optional_modules[module_name]
    try:
        module = importlib.import_module(module_name)
    except ImportError:
        return None
    _loaded_optional_modules[module_name] = module
    _expose_members(module)
    return module


def __getattr__(name: str) -> Any:
    for module_name, flag in OPTIONAL_MODULES.items():
        if name == flag:
            return _load_optional(module_name) is not None

    for module_name in OPTIONAL_MODULES:
        module = _load_optional(module_name)
        if module is not None and name in module.__dict__ and not name.startswith("_"):
            return getattr(module, name)

    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")


def __dir__() -> list[str]:
    return sorted(set(__all__) | {k for k in globals() if not k.startswith("_")})
