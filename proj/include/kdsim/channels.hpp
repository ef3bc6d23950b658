#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "linalg.hpp"

namespace kdsim {

/// One dissipative process: the jump operator and its rate. The rate stays
/// separate from the operator because each step needs the product rate*dt.
struct Jump {
    ComplexMatrix op;
    double rate_per_fs = 0.0;
};

/// H in eV, rates in 1/fs.
struct LindbladModel {
    ComplexMatrix hamiltonian;
    std::vector<Jump> jumps;
    std::string label;

    [[nodiscard]] Eigen::Index dim() const { return hamiltonian.rows(); }

    void validate() const {
        if (hamiltonian.size() == 0) {
            fail(ErrorCode::InvalidModel, "LindbladModel: empty Hamiltonian");
        }
        linalg::require_hermitian(hamiltonian, kFactorTol, "LindbladModel");
        for (std::size_t k = 0; k < jumps.size(); ++k) {
            const auto &j = jumps[k];
            linalg::require_finite(j.op, "LindbladModel jump");
            if (j.op.rows() != dim() || j.op.cols() != dim()) {
                fail(ErrorCode::DimensionMismatch,
                     "LindbladModel: jump " + std::to_string(k) +
                         " dimension differs from the Hamiltonian");
            }
            if (!(j.rate_per_fs >= 0.0) || !std::isfinite(j.rate_per_fs)) {
                fail(ErrorCode::InvalidModel,
                     "LindbladModel: jump " + std::to_string(k) +
                         " has a negative or non-finite rate");
            }
        }
    }
};

/// Ordered Kraus operators; ops[0] is the completion operator M0.
struct KrausSet {
    std::vector<ComplexMatrix> ops;
    double dt_fs = 0.0; ///< 0 when the set does not encode a time step

    [[nodiscard]] Eigen::Index dim() const {
        return ops.empty() ? 0 : ops.front().rows();
    }
    [[nodiscard]] std::size_t size() const { return ops.size(); }

    /// ||sum_k M_k^dagger M_k - I||_F
    [[nodiscard]] double completeness_error() const {
        ComplexMatrix acc = ComplexMatrix::Zero(dim(), dim());
        for (const auto &m : ops) acc.noalias() += m.adjoint() * m;
        return (acc - linalg::identity(dim())).norm();
    }
};

class DensityMatrix {
  public:
    /// Validates Hermiticity, unit trace and positivity within trace_tol.
    explicit DensityMatrix(ComplexMatrix m, double trace_tol = 1e-9)
        : matrix_(std::move(m)) {
        linalg::require_hermitian(matrix_, trace_tol, "DensityMatrix");
        if (std::abs(matrix_.trace() - Complex(1.0)) > trace_tol) {
            fail(ErrorCode::InvalidProbability, "DensityMatrix: trace is not 1");
        }
        Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(
            0.5 * (matrix_ + matrix_.adjoint()), Eigen::EigenvaluesOnly);
        if (eig.eigenvalues().minCoeff() < -trace_tol) {
            fail(ErrorCode::NotPSD, "DensityMatrix: negative eigenvalue");
        }
    }

    /// Engine outputs: pruning may leave trace slightly below one.
    static DensityMatrix unchecked(ComplexMatrix m) {
        DensityMatrix d;
        d.matrix_ = std::move(m);
        return d;
    }

    [[nodiscard]] const ComplexMatrix &matrix() const { return matrix_; }
    [[nodiscard]] Eigen::Index dim() const { return matrix_.rows(); }
    [[nodiscard]] RealVector populations() const {
        return matrix_.diagonal().real();
    }
    [[nodiscard]] double trace() const { return matrix_.trace().real(); }

  private:
    DensityMatrix() = default;
    ComplexMatrix matrix_;
};

struct EnsembleComponent {
    double weight = 1.0;
    StateVector state;
};

/// Mixed initial state as a list of weighted pure states.
class InitialEnsemble {
  public:
    explicit InitialEnsemble(std::vector<EnsembleComponent> components)
        : components_(std::move(components)) {
        if (components_.empty()) {
            fail(ErrorCode::InvalidProbability, "InitialEnsemble: no components");
        }
        double total = 0.0;
        const auto n = components_.front().state.size();
        for (const auto &c : components_) {
            if (!(c.weight >= 0.0 && c.weight <= 1.0)) {
                fail(ErrorCode::InvalidProbability,
                     "InitialEnsemble: weight outside [0, 1]");
            }
            if (c.state.size() != n || n == 0) {
                fail(ErrorCode::DimensionMismatch,
                     "InitialEnsemble: components differ in dimension");
            }
            if (std::abs(c.state.norm() - 1.0) > 1e-12) {
                fail(ErrorCode::NotNormalized,
                     "InitialEnsemble: state is not normalized");
            }
            total += c.weight;
        }
        if (std::abs(total - 1.0) > 1e-12) {
            fail(ErrorCode::InvalidProbability,
                 "InitialEnsemble: weights do not sum to 1");
        }
    }

    static InitialEnsemble pure(StateVector v) {
        return InitialEnsemble({EnsembleComponent{1.0, std::move(v)}});
    }
    static InitialEnsemble basis(Eigen::Index n, Eigen::Index i) {
        return pure(linalg::basis_state(n, i));
    }

    [[nodiscard]] const std::vector<EnsembleComponent> &components() const {
        return components_;
    }
    [[nodiscard]] Eigen::Index dim() const {
        return components_.front().state.size();
    }

  private:
    std::vector<EnsembleComponent> components_;
};

/// sum_i p_i |phi_i><phi_i|
inline DensityMatrix pure_state_density(const InitialEnsemble &ensemble) {
    const auto n = ensemble.dim();
    ComplexMatrix rho = ComplexMatrix::Zero(n, n);
    for (const auto &c : ensemble.components()) {
        rho.noalias() += c.weight * (c.state * c.state.adjoint());
    }
    return DensityMatrix(std::move(rho));
}

/// M_k = sqrt(rate_k dt) L_k, completed by M0 = sqrt(I - sum M_k^dagger M_k).
/// With `apply_coherent`, every operator is left-multiplied by
/// exp(-i H dt / hbar).
inline KrausSet kraus_from_lindblad(const LindbladModel &model, double dt_fs,
                                    bool apply_coherent,
                                    double hbar = kHbarEvFs) {
    model.validate();
    if (!(dt_fs > 0.0) || !std::isfinite(dt_fs)) {
        fail(ErrorCode::StepTooLarge, "kraus_from_lindblad: dt must be positive");
    }
    const auto n = model.dim();
    KrausSet ks;
    ks.dt_fs = dt_fs;
    ks.ops.reserve(model.jumps.size() + 1);
    ks.ops.emplace_back(); // M0 placeholder

    ComplexMatrix loss = ComplexMatrix::Zero(n, n);
    for (std::size_t k = 0; k < model.jumps.size(); ++k) {
        const auto &j = model.jumps[k];
        const double p = j.rate_per_fs * dt_fs;
        if (p > 0.0) {
            const double norm = linalg::spectral_norm(j.op);
            if (p * norm * norm >= 1.0) {
                fail(ErrorCode::StepTooLarge,
                     "kraus_from_lindblad: rate*dt*||L||^2 >= 1 for jump " +
                         std::to_string(k));
            }
        }
        ComplexMatrix m = std::sqrt(p) * j.op;
        loss.noalias() += m.adjoint() * m;
        ks.ops.push_back(std::move(m));
    }
    ks.ops[0] = linalg::psd_sqrt(linalg::identity(n) - loss);

    if (apply_coherent) {
        const ComplexMatrix u =
            linalg::hermitian_propagator(model.hamiltonian, dt_fs, hbar);
        for (auto &m : ks.ops) m = u * m;
    }
    return ks;
}

/// sum_k M_k rho M_k^dagger
inline DensityMatrix apply_channel(const KrausSet &ks, const DensityMatrix &rho) {
    if (ks.ops.empty() || ks.dim() != rho.dim()) {
        fail(ErrorCode::DimensionMismatch,
             "apply_channel: Kraus set and density matrix dimensions differ");
    }
    const auto n = rho.dim();
    ComplexMatrix out = ComplexMatrix::Zero(n, n);
    for (const auto &m : ks.ops) {
        out.noalias() += m * rho.matrix() * m.adjoint();
    }
    return DensityMatrix::unchecked(0.5 * (out + out.adjoint()));
}

/// Two-level damping with decay probability p1 (|1> -> |0>) and excitation
/// probability p2 (|0> -> |1>) per step. p2 = 0 is zero-temperature
/// amplitude damping.
inline KrausSet damping_channel(double p1, double p2) {
    const bool ok = p1 >= 0.0 && p1 < 1.0 && p2 >= 0.0 && p2 < 1.0 &&
                    p1 + p2 < 1.0;
    if (!ok) {
        fail(ErrorCode::InvalidProbability,
             "damping_channel: need p1, p2 in [0, 1) with p1 + p2 < 1");
    }
    KrausSet ks;
    ComplexMatrix m0 = ComplexMatrix::Zero(2, 2);
    m0(0, 0) = std::sqrt(1.0 - p2);
    m0(1, 1) = std::sqrt(1.0 - p1);
    ks.ops.push_back(std::move(m0));
    ks.ops.push_back(std::sqrt(p1) * linalg::basis_op(2, 0, 1));
    ks.ops.push_back(std::sqrt(p2) * linalg::basis_op(2, 1, 0));
    return ks;
}

} // namespace kdsim
