import sys

from setuptools import setup

# The compiled walk/skip-gram kernel is optional: formgraph falls back to the
# pure-Python kernel at import time when the extension is missing.
ext_modules = []
try:
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "formgraph._sgns",
                ["src/formgraph/_sgns.pyx"],
                # -ffp-contract=off keeps the compiled kernel bitwise-identical
                # to the pure-Python fallback (no FMA fusion).
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except Exception as exc:  # pragma: no cover - build-env dependent
    sys.stderr.write(f"formgraph: skipping compiled kernel ({exc})\n")

setup(ext_modules=ext_modules)
