#pragma once

namespace doslab {

/// Some OpenBLAS builds pick AVX-512 kernels that corrupt LAPACK eigenvectors.
/// When OPENBLAS_CORETYPE is unset this sets it to Haswell and re-executes the
/// current binary with the same arguments; call first thing in main().
void ensure_blas_environment(int argc, char** argv);

/// Solves a small path-graph problem once per process and throws SolverError
/// when the eigenvectors are not orthonormal.
void verify_eigensolver();

}  // namespace doslab
