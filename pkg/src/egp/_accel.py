"""Backend switch for the hot kernels.

Numba is used when importable unless ``EGP_DISABLE_NUMBA`` is set to a truthy
value, in which case every kernel runs its pure-numpy path. The flag is read
once at import time.
"""
import contextlib
import os
import threading

_FLAG = os.environ.get("EGP_DISABLE_NUMBA", "").strip().lower()
_DISABLED = _FLAG in ("1", "true", "yes", "on")

try:
    if _DISABLED:
        raise ImportError("numba disabled by EGP_DISABLE_NUMBA")
    import numba
    from numba import njit, prange

    if "NUMBA_THREADING_LAYER" not in os.environ:
        # skip the TBB probe, which warns on older system TBB builds
        numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]
    HAS_NUMBA = True
except ImportError:
    numba = None
    HAS_NUMBA = False
    prange = range

    def njit(*args, **kwargs):
        # bare @njit or @njit(...) both become identity decorators
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda fn: fn


_local = threading.local()


def backend():
    return "numba" if HAS_NUMBA else "numpy"


def serial_only():
    """True when the calling thread must not launch parallel kernels."""
    return getattr(_local, "serial", False)


@contextlib.contextmanager
def serial_kernels():
    """Run kernels single-threaded in this thread.

    Worker threads that already parallelize at a coarser grain enter this so
    numba never nests a parallel region inside another thread's region.
    """
    prev = serial_only()
    _local.serial = True
    try:
        yield
    finally:
        _local.serial = prev


def set_threads(n):
    """Cap numba's worker pool at ``n`` (clamped to the pool size). Returns the cap used."""
    n = max(1, int(n))
    if HAS_NUMBA:
        n = min(n, numba.config.NUMBA_NUM_THREADS)
        numba.set_num_threads(n)
    return n
