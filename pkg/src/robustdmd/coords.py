"""Complex <-> stacked-real coordinate packing.

All optimizers treat the real and imaginary components of complex
variables as independent real parameters.  A complex k-vector ``b`` is
packed as the 2k real vector ``[Re b; Im b]``; a "gradient as complex"
vector packs the partials with respect to the real parts in its real part
and the partials with respect to the imaginary parts in its imaginary
part, so packing it yields the true real-coordinate gradient.
"""

import numpy as np


def pack(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    return np.concatenate([z.real, z.imag])


def unpack(u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    k = u.size // 2
    return u[:k] + 1j * u[k:]
