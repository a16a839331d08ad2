"""Build the optional compiled shooting kernel.

The extension is best-effort: if the C toolchain is unavailable the package
installs anyway and hgl.selfsim falls back to the pure-Python integrator.
"""

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # toolchain missing: fall back to pure Python
            print(f"warning: compiled kernel skipped ({exc})")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"warning: building {ext.name} failed ({exc}); "
                  "pure-Python fallback will be used")


extensions = [
    Extension(
        "hgl._shoot_core",
        ["src/hgl/_shoot_core.pyx"],
        # -ffp-contract=off keeps the C arithmetic bit-compatible with the
        # pure-Python fallback (no FMA contraction).
        extra_compile_args=["-O3", "-ffp-contract=off"],
    )
]

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(extensions, compiler_directives={"language_level": "3"})
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules, cmdclass={"build_ext": optional_build_ext})
