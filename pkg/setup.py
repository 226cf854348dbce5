"""Build hook for the optional compiled kernels.

The package is pure Python plus one Cython accelerator module. If Cython or
a C compiler is unavailable the build falls through and the NumPy fallback
kernels are used at runtime; nothing in the public API changes.
"""

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing, cython missing, ...
            print(f"warning: skipping compiled kernels ({exc!r}); "
                  "NumPy fallback will be used")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"warning: building {ext.name} failed ({exc!r}); "
                  "NumPy fallback will be used")


def extensions():
    try:
        import numpy
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "efimov3b._kernels",
        ["src/efimov3b/_kernels.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3"],
    )
    return cythonize([ext], language_level=3)


setup(ext_modules=extensions(), cmdclass={"build_ext": OptionalBuildExt})
