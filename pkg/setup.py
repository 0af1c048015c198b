import os

from setuptools import Extension, setup


def extensions():
    """Compiled event-loop kernel; skipped when Cython is unavailable or
    HETSCHED_PURE_PYTHON is set (the package falls back to the pure-Python
    kernel at import time)."""
    if os.environ.get("HETSCHED_PURE_PYTHON"):
        return []
    try:
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "hetsched.sim._core",
        ["src/hetsched/sim/_core.pyx"],
        extra_compile_args=["-O3"],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


setup(ext_modules=extensions())
