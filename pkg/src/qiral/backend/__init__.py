"""C code generation and the native build/compare harness."""

from .build import (BuildReport, NativeRun, build_and_diff, compile_source, find_compiler,
                    max_rel_diff, run_native)
from .emit import LibraryBinding, apply_bindings, emit, runtime_files

__all__ = ["BuildReport", "LibraryBinding", "NativeRun", "apply_bindings", "build_and_diff",
           "compile_source", "emit", "find_compiler", "max_rel_diff", "run_native",
           "runtime_files"]
