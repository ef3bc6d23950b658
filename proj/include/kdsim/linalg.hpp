#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "error.hpp"

namespace kdsim {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using StateVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

/// Default tolerance for symmetry and PSD checks in the factorizations.
inline constexpr double kFactorTol = 1e-10;

/// Reduced Planck constant in eV*fs.
inline constexpr double kHbarEvFs = 0.6582119569;

/// One atomic unit of time in fs.
inline constexpr double kFsPerAtomicUnit = 0.02418884;

namespace linalg {

inline bool all_finite(const ComplexMatrix &a) {
    return a.array().isFinite().all();
}

inline void require_finite(const ComplexMatrix &a, const char *what) {
    if (a.size() == 0 || !all_finite(a)) {
        fail(ErrorCode::NonFinite,
             std::string(what) + ": matrix is empty or has non-finite entries");
    }
}

inline void require_square(const ComplexMatrix &a, const char *what) {
    if (a.rows() != a.cols()) {
        fail(ErrorCode::DimensionMismatch,
             std::string(what) + ": matrix is not square");
    }
}

/// Entrywise max |A - A^dagger|.
inline double hermitian_deviation(const ComplexMatrix &a) {
    if (a.rows() != a.cols()) return INFINITY;
    return (a - a.adjoint()).cwiseAbs().maxCoeff();
}

struct HermitianCheck {
    const ComplexMatrix &matrix;
    double tolerance = kFactorTol;

    [[nodiscard]] bool passes() const {
        return matrix.rows() == matrix.cols() &&
               hermitian_deviation(matrix) <= tolerance;
    }
};

inline void require_hermitian(const ComplexMatrix &a, double tol,
                              const char *what) {
    require_finite(a, what);
    require_square(a, what);
    if (!HermitianCheck{a, tol}.passes()) {
        fail(ErrorCode::NotHermitian,
             std::string(what) + ": matrix is not Hermitian within tolerance");
    }
}

inline ComplexMatrix identity(Eigen::Index n) {
    return ComplexMatrix::Identity(n, n);
}

/// |row><col| in dimension n.
inline ComplexMatrix basis_op(Eigen::Index n, Eigen::Index row,
                              Eigen::Index col) {
    ComplexMatrix m = ComplexMatrix::Zero(n, n);
    m(row, col) = 1.0;
    return m;
}

inline StateVector basis_state(Eigen::Index n, Eigen::Index i) {
    StateVector v = StateVector::Zero(n);
    v(i) = 1.0;
    return v;
}

inline double frobenius_norm(const ComplexMatrix &a) { return a.norm(); }

/// Largest singular value.
inline double spectral_norm(const ComplexMatrix &a) {
    require_finite(a, "spectral_norm");
    Eigen::JacobiSVD<ComplexMatrix> svd(a);
    return svd.singularValues()(0);
}

/// Hermitian square root of a PSD matrix. Eigenvalues in [-tol, 0) are
/// clamped to zero.
inline ComplexMatrix psd_sqrt(const ComplexMatrix &a, double tol = kFactorTol) {
    require_hermitian(a, tol, "psd_sqrt");
    const ComplexMatrix sym = 0.5 * (a + a.adjoint());
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(sym);
    RealVector lambda = eig.eigenvalues();
    if (lambda.minCoeff() < -tol) {
        fail(ErrorCode::NotPSD, "psd_sqrt: eigenvalue " +
                                    std::to_string(lambda.minCoeff()) +
                                    " below -tol");
    }
    RealVector root = lambda.cwiseMax(0.0).cwiseSqrt();
    const ComplexMatrix &v = eig.eigenvectors();
    ComplexMatrix s = v * root.asDiagonal() * v.adjoint();
    return 0.5 * (s + s.adjoint());
}

/// Lower-triangular L with L L^dagger = A for Hermitian PSD A. Pivots that
/// vanish to rounding level produce a zero column instead of jittering the
/// diagonal, so exactly singular inputs give exactly singular factors.
inline ComplexMatrix cholesky_psd(const ComplexMatrix &a,
                                  double tol = kFactorTol) {
    require_hermitian(a, tol, "cholesky_psd");
    const Eigen::Index n = a.rows();
    const double scale = std::max(1.0, a.diagonal().cwiseAbs().maxCoeff());
    const double zero_pivot = 64.0 * n * std::numeric_limits<double>::epsilon() * scale;

    ComplexMatrix l = ComplexMatrix::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        double d = a(j, j).real();
        for (Eigen::Index k = 0; k < j; ++k) d -= std::norm(l(j, k));
        if (d < -tol) {
            fail(ErrorCode::NotPSD, "cholesky_psd: pivot " + std::to_string(d) +
                                        " below -tol at column " +
                                        std::to_string(j));
        }
        if (d <= zero_pivot) continue;
        const double pivot = std::sqrt(d);
        l(j, j) = pivot;
        for (Eigen::Index i = j + 1; i < n; ++i) {
            // use the lower triangle of the symmetrized input
            Complex s = 0.5 * (a(i, j) + std::conj(a(j, i)));
            for (Eigen::Index k = 0; k < j; ++k) s -= l(i, k) * std::conj(l(j, k));
            l(i, j) = s / pivot;
        }
    }
    return l;
}

/// exp(-i H dt / hbar) via the eigendecomposition of H.
inline ComplexMatrix hermitian_propagator(const ComplexMatrix &h, double dt,
                                          double hbar = kHbarEvFs,
                                          double tol = kFactorTol) {
    require_hermitian(h, tol, "hermitian_propagator");
    const ComplexMatrix sym = 0.5 * (h + h.adjoint());
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(sym);
    const RealVector &lambda = eig.eigenvalues();
    Eigen::VectorXcd phase(lambda.size());
    for (Eigen::Index i = 0; i < lambda.size(); ++i) {
        phase(i) = std::polar(1.0, -lambda(i) * dt / hbar);
    }
    const ComplexMatrix &v = eig.eigenvectors();
    return v * phase.asDiagonal() * v.adjoint();
}

} // namespace linalg
} // namespace kdsim
