#include "doslab/backend.hpp"

#include "doslab/error.hpp"

#include <lapacke.h>

#include <cmath>
#include <cstdlib>
#include <mutex>
#include <string>
#include <unistd.h>
#include <vector>

namespace doslab {

void ensure_blas_environment(int argc, char** argv) {
  (void)argc;
  if (std::getenv("OPENBLAS_CORETYPE") != nullptr) return;
  if (std::getenv("DOSLAB_NO_REEXEC") != nullptr) return;
  ::setenv("OPENBLAS_CORETYPE", "Haswell", 1);
  ::execv("/proc/self/exe", argv);
  // execv only returns on failure; continue and let verify_eigensolver() decide.
}

void verify_eigensolver() {
  static std::once_flag once;
  static std::string failure;
  std::call_once(once, [] {
    const int n = 160;
    std::vector<double> a(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i + 1 < n; ++i) {
      a[static_cast<std::size_t>(i) * n + i + 1] = 1.0;
      a[static_cast<std::size_t>(i + 1) * n + i] = 1.0;
    }
    for (int i = 0; i < n; ++i) a[static_cast<std::size_t>(i) * n + i] = 0.3 * std::sin(1.7 * i);
    std::vector<double> w(n);
    if (LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', n, a.data(), n, w.data()) != 0) {
      failure = "dsyevd self-check failed";
      return;
    }
    double worst = 0.0;
    for (int p = 0; p < n; ++p) {
      for (int q = p; q < n; ++q) {
        double dot = 0.0;
        for (int i = 0; i < n; ++i) dot += a[static_cast<std::size_t>(p) * n + i] * a[static_cast<std::size_t>(q) * n + i];
        worst = std::max(worst, std::fabs(dot - (p == q ? 1.0 : 0.0)));
      }
    }
    if (worst > 1e-8) {
      failure = "LAPACK backend returns non-orthonormal eigenvectors (error " + std::to_string(worst) +
                "); set OPENBLAS_CORETYPE=Haswell";
    }
  });
  if (!failure.empty()) throw SolverError(failure);
}

}  // namespace doslab
