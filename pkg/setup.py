"""Build script: compiles the optional Cython kernel extension.

The package works without the extension (a NumPy fallback is selected at
import time), so a failed compilation downgrades to a pure build instead of
aborting the install.  Set SOSINFER_NO_EXT=1 to skip the extension entirely.
"""

import os

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class BuildFailed(Exception):
    pass


class optional_build_ext(build_ext):
    def run(self):
        try:
            build_ext.run(self)
        except Exception as exc:
            raise BuildFailed(str(exc)) from exc

    def build_extension(self, ext):
        try:
            build_ext.build_extension(self, ext)
        except Exception as exc:
            raise BuildFailed(str(exc)) from exc


def make_extensions():
    from Cython.Build import cythonize
    import numpy as np

    ext = Extension(
        "sosinfer._kernels",
        ["src/sosinfer/_kernels.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=["-O3"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize(
        [ext],
        compiler_directives={
            "language_level": 3,
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
            "initializedcheck": False,
        },
    )


def run_setup(with_ext):
    if with_ext:
        setup(ext_modules=make_extensions(), cmdclass={"build_ext": optional_build_ext})
    else:
        setup()


if os.environ.get("SOSINFER_NO_EXT") == "1":
    run_setup(False)
else:
    try:
        run_setup(True)
    except BuildFailed:
        print("WARNING: kernel extension failed to build; installing pure-Python version")
        run_setup(False)
