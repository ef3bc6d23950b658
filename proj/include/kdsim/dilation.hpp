#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "linalg.hpp"

namespace kdsim {

/// Contractions may exceed unit spectral norm by this much (rounding drift
/// from Kraus completion).
inline constexpr double kContractionTol = 1e-9;

/// Sz.-Nagy 1-dilation U = [[M, D_{M^dagger}], [D_M, -M^dagger]] of the
/// contraction `source`. When the input norm drifted above one it is
/// rescaled first; `weight_scale` = norm^2 must then multiply the term weight.
struct DilatedUnitary {
    ComplexMatrix matrix;
    Eigen::Index base_dim = 0;
    double source_norm_check = 0.0;
    double weight_scale = 1.0;
};

namespace detail {
inline void require_contraction(double norm, const char *what) {
    if (norm > 1.0 + kContractionTol) {
        fail(ErrorCode::NotContraction, std::string(what) +
                                            ": spectral norm " +
                                            std::to_string(norm) + " exceeds 1");
    }
}
} // namespace detail

namespace detail {
struct DefectPair {
    ComplexMatrix d_m;     ///< sqrt(I - M^dagger M)
    ComplexMatrix d_m_adj; ///< sqrt(I - M M^dagger)
};

// Both defects from one SVD M = W S V^dagger, so M D_M = D_{M^dagger} M holds
// to rounding even where sqrt(1 - s^2) is only sqrt(eps) accurate.
inline DefectPair defect_pair(const ComplexMatrix &m) {
    Eigen::JacobiSVD<ComplexMatrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    RealVector c = svd.singularValues();
    for (Eigen::Index i = 0; i < c.size(); ++i) {
        const double s = std::min(c(i), 1.0);
        c(i) = std::sqrt((1.0 - s) * (1.0 + s));
    }
    const ComplexMatrix &w = svd.matrixU();
    const ComplexMatrix &v = svd.matrixV();
    DefectPair p;
    p.d_m = v * c.asDiagonal() * v.adjoint();
    p.d_m_adj = w * c.asDiagonal() * w.adjoint();
    p.d_m = 0.5 * (p.d_m + p.d_m.adjoint()).eval();
    p.d_m_adj = 0.5 * (p.d_m_adj + p.d_m_adj.adjoint()).eval();
    return p;
}
} // namespace detail

/// D_M = sqrt(I - M^dagger M)
inline ComplexMatrix defect_operator(const ComplexMatrix &m) {
    linalg::require_finite(m, "defect_operator");
    linalg::require_square(m, "defect_operator");
    detail::require_contraction(linalg::spectral_norm(m), "defect_operator");
    return detail::defect_pair(m).d_m;
}

inline DilatedUnitary dilate(const ComplexMatrix &m) {
    linalg::require_finite(m, "dilate");
    linalg::require_square(m, "dilate");
    const double norm = linalg::spectral_norm(m);
    detail::require_contraction(norm, "dilate");

    DilatedUnitary u;
    u.base_dim = m.rows();
    u.source_norm_check = norm;
    ComplexMatrix src = m;
    if (norm > 1.0) {
        src /= norm;
        u.weight_scale = norm * norm;
    }
    const Eigen::Index n = src.rows();
    const auto defects = detail::defect_pair(src);
    u.matrix.resize(2 * n, 2 * n);
    u.matrix.topLeftCorner(n, n) = src;
    u.matrix.topRightCorner(n, n) = defects.d_m_adj;
    u.matrix.bottomLeftCorner(n, n) = defects.d_m;
    u.matrix.bottomRightCorner(n, n) = -src.adjoint();
    return u;
}

/// (v, 0, ..., 0)
inline StateVector embed_state(const StateVector &v) {
    if (v.size() == 0 || !v.array().isFinite().all() ||
        std::abs(v.norm() - 1.0) > 1e-12) {
        fail(ErrorCode::NotNormalized, "embed_state: input is not normalized");
    }
    StateVector out = StateVector::Zero(2 * v.size());
    out.head(v.size()) = v;
    return out;
}

} // namespace kdsim
