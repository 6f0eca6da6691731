"""Build script for the optional compiled word-generation kernel.

Set RANDPROMPT_AD_NO_EXT=1 to skip building the extension; the package
falls back to the pure-Python generation backend at import time.
"""

import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("RANDPROMPT_AD_NO_EXT") != "1":
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "randprompt_ad._fastgen",
                ["src/randprompt_ad/_fastgen.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": 3},
    )

setup(ext_modules=ext_modules)
