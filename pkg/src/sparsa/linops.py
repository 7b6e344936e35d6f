"""Matrix-free linear operators with adjoints and matvec accounting.

Every operator maps real vectors of length ``domain_dim`` to real vectors
of length ``range_dim`` and knows its adjoint. Images are handled as
row-major flattened vectors. Each instance carries a thread-safe counter
of forward/adjoint applications; the sum of the two is the "Ax" cost
statistic reported by the benchmark harness.
"""

from __future__ import annotations

import threading

import numpy as np


class MatvecCounter:
    """Thread-safe counter of forward and adjoint applications."""

    __slots__ = ("_lock", "forward_count", "adjoint_count")

    def __init__(self):
        self._lock = threading.Lock()
        self.forward_count = 0
        self.adjoint_count = 0

    def add_forward(self):
        with self._lock:
            self.forward_count += 1

    def add_adjoint(self):
        with self._lock:
            self.adjoint_count += 1

    @property
    def total(self) -> int:
        return self.forward_count + self.adjoint_count

    def reset(self):
        with self._lock:
            self.forward_count = 0
            self.adjoint_count = 0


class LinearOperator:
    """Base class for matrix-free operators.

    Subclasses set ``kind`` and implement ``_apply`` / ``_adjoint`` on
    validated 1-D float arrays. Instances are immutable after
    construction except for the counter; to share one operator across
    concurrent solves, give each solve its own :class:`CountingOperator`
    wrapper.
    """

    kind = "abstract"

    def __init__(self, domain_dim: int, range_dim: int):
        if domain_dim <= 0 or range_dim <= 0:
            raise ValueError("operator dimensions must be positive")
        self.domain_dim = int(domain_dim)
        self.range_dim = int(range_dim)
        self.counter = MatvecCounter()

    # -- public interface ---------------------------------------------------

    def apply(self, x) -> np.ndarray:
        """Return ``A x``. Counts one forward application."""
        x = self._check_vector(x, self.domain_dim, "apply")
        self.counter.add_forward()
        return self._apply(x)

    def adjoint(self, y) -> np.ndarray:
        """Return ``A^T y``. Counts one adjoint application."""
        y = self._check_vector(y, self.range_dim, "adjoint")
        self.counter.add_adjoint()
        return self._adjoint(y)

    @property
    def forward_count(self) -> int:
        return self.counter.forward_count

    @property
    def adjoint_count(self) -> int:
        return self.counter.adjoint_count

    @property
    def matvec_total(self) -> int:
        return self.counter.total

    def reset_counters(self):
        self.counter.reset()

    def norm_sq_estimate(self, iters: int = 100, seed: int = 0) -> float:
        """Power-iteration estimate of ``||A||^2 = lambda_max(A^T A)``.

        Returns the Rayleigh quotient after ``iters`` steps from a seeded
        random start, which is nondecreasing in ``iters``. Costs one
        forward and one adjoint application per step (counted).
        """
        if iters < 1:
            raise ValueError("iters must be >= 1")
        rng = np.random.default_rng(seed)
        v = rng.standard_normal(self.domain_dim)
        v /= np.linalg.norm(v)
        rayleigh = 0.0
        for _ in range(iters):
            z = self.adjoint(self.apply(v))
            rayleigh = float(v @ z)
            nz = np.linalg.norm(z)
            if nz == 0.0:
                return 0.0
            v = z / nz
        return rayleigh

    # -- helpers ------------------------------------------------------------

    def _check_vector(self, v, expected: int, what: str) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if v.ndim != 1 or v.shape[0] != expected:
            raise ValueError(
                f"{self.kind}.{what}: expected vector of length {expected}, "
                f"got shape {v.shape}"
            )
        return v

    def _apply(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _adjoint(self, y: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class IdentityOperator(LinearOperator):
    kind = "identity"

    def __init__(self, n: int):
        super().__init__(n, n)

    def _apply(self, x):
        return x.copy()

    def _adjoint(self, y):
        return y.copy()


class DenseOperator(LinearOperator):
    """Explicit matrix operator."""

    kind = "dense"

    def __init__(self, matrix):
        matrix = np.array(matrix, dtype=float)
        if matrix.ndim != 2:
            raise ValueError("dense operator needs a 2-D matrix")
        matrix.setflags(write=False)
        self.matrix = matrix
        super().__init__(matrix.shape[1], matrix.shape[0])

    def _apply(self, x):
        return self.matrix @ x

    def _adjoint(self, y):
        return self.matrix.T @ y


class PartialFourier2D(LinearOperator):
    """Masked 2-D DFT of an image, with real/imaginary parts stacked.

    Uses the unitary DFT normalization (1/sqrt(rows*cols) both ways), so
    for a full mask apply followed by adjoint is the identity. The range
    vector is ``[real parts; imaginary parts]`` of the masked
    coefficients, taken in row-major mask order, which keeps the whole
    pipeline real-valued with adjoint ``A^T y = Re(F^H zerofill(y))``.
    """

    kind = "partial-fourier-2d"

    def __init__(self, rows: int, cols: int, mask):
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != (rows, cols):
            raise ValueError("mask shape must be (rows, cols)")
        idx = np.flatnonzero(mask.ravel())
        if idx.size == 0:
            raise ValueError("mask selects no Fourier locations")
        self.rows = int(rows)
        self.cols = int(cols)
        self.mask = mask
        self._idx = idx
        self._scale = 1.0 / np.sqrt(rows * cols)
        super().__init__(rows * cols, 2 * idx.size)

    def _apply(self, x):
        spectrum = np.fft.fft2(x.reshape(self.rows, self.cols)) * self._scale
        picked = spectrum.ravel()[self._idx]
        return np.concatenate([picked.real, picked.imag])

    def _adjoint(self, y):
        m = self._idx.size
        coeffs = y[:m] + 1j * y[m:]
        spectrum = np.zeros(self.rows * self.cols, dtype=complex)
        spectrum[self._idx] = coeffs
        img = np.fft.ifft2(spectrum.reshape(self.rows, self.cols))
        return np.real(img).ravel() * (self.rows * self.cols) * self._scale


class Blur2D(LinearOperator):
    """Circular 2-D convolution with a blur kernel, via FFT.

    Defaults to a uniform ``mask_size x mask_size`` box kernel of total
    weight 1, centered at offsets ``arange(mask_size) - mask_size // 2``
    in each direction. A custom 2-D ``kernel`` may be supplied instead;
    it is placed with the same centering convention. The adjoint uses the
    conjugate transfer function, so adjoint consistency is exact even for
    kernels that are not symmetric under the circular shift.
    """

    kind = "blur-2d"

    def __init__(self, rows: int, cols: int, mask_size: int = 8, kernel=None):
        if kernel is None:
            if mask_size < 1 or mask_size > min(rows, cols):
                raise ValueError("mask_size must be in [1, min(rows, cols)]")
            kernel = np.full((mask_size, mask_size), 1.0 / mask_size**2)
        kernel = np.asarray(kernel, dtype=float)
        kh, kw = kernel.shape
        if kh > rows or kw > cols:
            raise ValueError("kernel larger than image")
        padded = np.zeros((rows, cols))
        roff, coff = kh // 2, kw // 2
        for i in range(kh):
            for j in range(kw):
                padded[(i - roff) % rows, (j - coff) % cols] += kernel[i, j]
        self.rows = int(rows)
        self.cols = int(cols)
        self.kernel = kernel
        self._transfer = np.fft.fft2(padded)
        super().__init__(rows * cols, rows * cols)

    def _convolve(self, x, transfer):
        img = x.reshape(self.rows, self.cols)
        out = np.fft.ifft2(np.fft.fft2(img) * transfer)
        return np.real(out).ravel()

    def _apply(self, x):
        return self._convolve(x, self._transfer)

    def _adjoint(self, y):
        return self._convolve(y, np.conj(self._transfer))


def haar_analysis_2d(image: np.ndarray, levels: int) -> np.ndarray:
    """Forward (analysis) orthonormal 2-D Haar transform.

    One level maps each 2x2 block ``[[a, b], [c, d]]`` to the four
    coefficients ``(a+b+c+d)/2``, ``(a-b+c-d)/2``, ``(a+b-c-d)/2`` and
    ``(a-b-c+d)/2``, arranged in the usual quadrant layout (average in
    the top-left, column differences top-right, row differences
    bottom-left, diagonal bottom-right); deeper levels recurse on the
    top-left quadrant.
    """
    out = np.array(image, dtype=float)
    r, c = out.shape
    for _ in range(levels):
        block = out[:r, :c]
        a = block[0::2, 0::2]
        b = block[0::2, 1::2]
        cc = block[1::2, 0::2]
        d = block[1::2, 1::2]
        r2, c2 = r // 2, c // 2
        merged = np.empty((r, c))
        merged[:r2, :c2] = (a + b + cc + d) / 2.0
        merged[:r2, c2:] = (a - b + cc - d) / 2.0
        merged[r2:, :c2] = (a + b - cc - d) / 2.0
        merged[r2:, c2:] = (a - b - cc + d) / 2.0
        out[:r, :c] = merged
        r, c = r2, c2
    return out

def haar_synthesis_2d(coeffs: np.ndarray, levels: int) -> np.ndarray:
    """Inverse of :func:`haar_analysis_2d` (orthonormal, so the transpose)."""
    out = np.array(coeffs, dtype=float)
    rows, cols = out.shape
    for r2, c2 in [(rows >> lv, cols >> lv) for lv in range(levels, 0, -1)]:
        ll = out[:r2, :c2]
        h = out[:r2, c2 : 2 * c2]
        v = out[r2 : 2 * r2, :c2]
        dg = out[r2 : 2 * r2, c2 : 2 * c2]
        block = np.empty((2 * r2, 2 * c2))
        block[0::2, 0::2] = (ll + h + v + dg) / 2.0
        block[0::2, 1::2] = (ll - h + v - dg) / 2.0
        block[1::2, 0::2] = (ll + h - v - dg) / 2.0
        block[1::2, 1::2] = (ll - h - v + dg) / 2.0
        out[: 2 * r2, : 2 * c2] = block
    return out


class HaarSynthesis2D(LinearOperator):
    """Orthonormal 2-D Haar synthesis operator ``W``.

    The solver variable lives in wavelet-coefficient space: ``apply``
    synthesizes an image from coefficients and ``adjoint`` analyzes an
    image back into coefficients. ``W`` is square orthonormal, so
    ``W^T W = I``. ``levels = 0`` is the identity.
    """

    kind = "haar-dwt-2d"

    def __init__(self, rows: int, cols: int, levels: int):
        if levels < 0:
            raise ValueError("levels must be >= 0")
        if rows % (1 << levels) or cols % (1 << levels):
            raise ValueError(
                f"image dims ({rows}, {cols}) not divisible by 2^{levels}"
            )
        self.rows = int(rows)
        self.cols = int(cols)
        self.levels = int(levels)
        super().__init__(rows * cols, rows * cols)

    def _apply(self, x):
        return haar_synthesis_2d(x.reshape(self.rows, self.cols), self.levels).ravel()

    def _adjoint(self, y):
        return haar_analysis_2d(y.reshape(self.rows, self.cols), self.levels).ravel()


class ComposedOperator(LinearOperator):
    """Composition ``A = outer o inner`` (apply = outer(inner(x))).

    Applying the composition counts once on the composition itself and
    once on each constituent.
    """

    kind = "composition"

    def __init__(self, outer: LinearOperator, inner: LinearOperator):
        if inner.range_dim != outer.domain_dim:
            raise ValueError(
                f"cannot compose: inner range {inner.range_dim} != "
                f"outer domain {outer.domain_dim}"
            )
        self.outer = outer
        self.inner = inner
        super().__init__(inner.domain_dim, outer.range_dim)

    def _apply(self, x):
        return self.outer.apply(self.inner.apply(x))

    def _adjoint(self, y):
        return self.inner.adjoint(self.outer.adjoint(y))

    def reset_counters(self):
        self.counter.reset()
        self.outer.reset_counters()
        self.inner.reset_counters()


class CountingOperator(LinearOperator):
    """Per-solve counting wrapper around a shared operator.

    Keeps its own counter while delegating to (and therefore also
    counting on) the wrapped operator. Use one wrapper per concurrent
    solve when the underlying operator is shared.
    """

    def __init__(self, inner: LinearOperator):
        self.inner = inner
        super().__init__(inner.domain_dim, inner.range_dim)
        self.kind = inner.kind

    def _apply(self, x):
        return self.inner.apply(x)

    def _adjoint(self, y):
        return self.inner.adjoint(y)
