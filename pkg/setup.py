"""Optional Cython build of the trajectory kernel; the package works without it."""

from setuptools import setup

try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        "src/bolzalab/_trajkernel.pyx",
        compiler_directives={"language_level": "3"},
    )
    for ext in ext_modules:
        ext.include_dirs.append(numpy.get_include())
        ext.extra_compile_args.append("-O3")
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
