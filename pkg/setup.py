from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "dynqueue._kernels",
                ["src/dynqueue/_kernels.pyx"],
                # -ffp-contract=off keeps the compiled kernels bit-identical
                # to the pure-Python reference (no FMA re-association).
                extra_compile_args=["-O3", "-ffp-contract=off"],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
