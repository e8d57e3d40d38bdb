"""Dense-matrix oracles built from explicit DFT matrices.

These deliberately avoid the package's FFT pipeline: multipliers become
diagonal matrices conjugated by an explicitly constructed DFT matrix,
weights become diagonal matrices, and compositions are plain matrix
products.  Small grids only (8^3 is the working size).
"""

import numpy as np


def dft_matrix(grid):
    """Matrix F with F @ f.ravel() == fftn(f).ravel()."""
    ks = np.stack([kc.ravel() for kc in np.meshgrid(*([grid.k_axis] * grid.d), indexing="ij")], axis=1)
    xs = np.stack([c.ravel() for c in grid.coordinates()], axis=1)
    return np.exp(-1j * ks @ xs.T)


def dense_multiplier(grid, symbol_values):
    F = dft_matrix(grid)
    Finv = np.conj(F).T / grid.node_count()
    return Finv @ (symbol_values.ravel()[:, None] * F)


def dense_weight(values):
    return np.diag(np.asarray(values, dtype=np.complex128).ravel())


def dense_generator(grid, b):
    """-Laplacian + b.grad as a dense matrix."""
    lap = dense_multiplier(grid, -grid.k_squared.astype(np.complex128))
    out = -lap
    for j in range(grid.d):
        dj = dense_multiplier(grid, 1j * grid.k_components[j] + 0j * grid.k_squared)
        out = out + dense_weight(b.values[j]) @ dj
    return out


def dense_input_factor(grid, assembly):
    """b^(1/p) . grad (zeta - Lap)^(-1) as a dense matrix."""
    out = np.zeros((grid.node_count(),) * 2, dtype=np.complex128)
    for j in range(grid.d):
        mult = dense_multiplier(grid, assembly.sym_grad_res[j])
        out += dense_weight(assembly.weight_vec[j]) @ mult
    return out


def dense_output_factor(grid, assembly):
    mult = dense_multiplier(grid, assembly.sym_res)
    return mult @ dense_weight(assembly.weight_out)


def dense_weighted_resolvent(grid, assembly):
    mult = dense_multiplier(grid, assembly.sym_res)
    return dense_weight(assembly.weight_in_mag) @ mult


def dense_loop_factor(grid, assembly):
    return dense_input_factor(grid, assembly) @ dense_weight(assembly.weight_out)


def apply_dense(M, f_values):
    return (M @ f_values.ravel()).reshape(f_values.shape)
