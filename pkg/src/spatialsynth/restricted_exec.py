"""Restricted in-process execution of trusted answer programs.

Compiles the program in a namespace exposing only math and container builtins
(plus the math module), locates `func`, calls it with (metadata) or
(metadata, camera_position) depending on its arity, and classifies the result
using the runner wire statuses. Time is measured but not enforced by a hard
kill; untrusted code belongs in the external runner process.
"""

from __future__ import annotations

import io
import math
import time
from contextlib import redirect_stdout

_SAFE_BUILTIN_NAMES = (
    "abs", "all", "any", "bool", "dict", "divmod", "enumerate", "filter", "float",
    "frozenset", "int", "isinstance", "len", "list", "map", "max", "min", "pow",
    "range", "repr", "reversed", "round", "set", "sorted", "str", "sum", "tuple", "zip",
    "ValueError", "KeyError", "IndexError", "TypeError", "StopIteration",
    "ZeroDivisionError", "ArithmeticError", "Exception", "True", "False", "None",
)

_ALLOWED_IMPORTS = {"math": math}


def _guarded_import(name, globals=None, locals=None, fromlist=(), level=0):
    if name in _ALLOWED_IMPORTS:
        return _ALLOWED_IMPORTS[name]
    raise ImportError(f"import of '{name}' is not permitted")


def build_namespace() -> dict:
    import builtins

    safe = {name: getattr(builtins, name) for name in _SAFE_BUILTIN_NAMES if hasattr(builtins, name)}
    safe["__import__"] = _guarded_import
    safe["print"] = print  # stdout is redirected to a scratch buffer during execution
    return {"__builtins__": safe, "math": math}


def execute_program(request: dict) -> dict:
    """One wire-schema request -> one wire-schema response."""
    code = request.get("code", "")
    metadata = request.get("metadata", [])
    camera_position = request.get("camera_position")
    timeout_s = float(request.get("timeout_s", 10.0))

    def respond(status: str, result: str = "", error: str = "", started: float | None = None) -> dict:
        wall_ms = int((time.perf_counter() - started) * 1000) if started is not None else 0
        return {"status": status, "result": result, "error": error, "wall_ms": wall_ms}

    if not code.strip():
        return respond("error", error="empty program")

    namespace = build_namespace()
    started = time.perf_counter()
    scratch = io.StringIO()
    try:
        with redirect_stdout(scratch):
            exec(compile(code, "<answer_program>", "exec"), namespace)
            func = namespace.get("func")
            if not callable(func):
                return respond("error", error="program does not define a callable 'func'", started=started)
            argcount = getattr(getattr(func, "__code__", None), "co_argcount", 1)
            if argcount == 1:
                value = func(metadata)
            elif argcount == 2:
                value = func(metadata, camera_position)
            else:
                return respond("error", error=f"func must take 1 or 2 arguments, not {argcount}", started=started)
    except (KeyError, StopIteration) as exc:
        return respond("object_not_found", error=f"{type(exc).__name__}: {exc}", started=started)
    except BaseException as exc:  # noqa: BLE001 - everything maps to an in-band status
        return respond("error", error=f"{type(exc).__name__}: {exc}", started=started)

    elapsed = time.perf_counter() - started
    if elapsed > timeout_s:
        return respond("timeout", error=f"exceeded {timeout_s}s", started=started)
    if not isinstance(value, str):
        return respond("non_string", error=f"func returned {type(value).__name__}, not str", started=started)
    return respond("ok", result=value, started=started)
