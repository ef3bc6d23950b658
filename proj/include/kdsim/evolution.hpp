#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "channels.hpp"

namespace kdsim {

enum class NormKind { frobenius, spectral };

struct PruningPolicy {
    double norm_threshold = 0.01;
    double grouping_tol = 1e-9;
    NormKind norm_kind = NormKind::frobenius;
    /// Keep every member word and scale of each group (exhaustive audits on
    /// small channels only; memory grows with the raw term count).
    bool track_members = false;

    void validate() const {
        if (!(norm_threshold >= 0.0) || !(grouping_tol >= 0.0)) {
            fail(ErrorCode::ConfigInvalid,
                 "PruningPolicy: thresholds must be non-negative");
        }
    }
};

/// One raw product folded into a group: member matrix = scale * representative.
struct GroupMember {
    std::vector<int> word;
    Complex scale{1.0, 0.0};
};

/// A grouped product of Kraus operators. `word` lists Kraus indices in
/// application order (word[0] acts first), so the representative is
/// M[word.back()] * ... * M[word.front()]. Its channel contribution is
/// weight * R rho R^dagger.
struct TermProduct {
    ComplexMatrix representative;
    double weight = 1.0;
    std::vector<int> word;
    std::vector<GroupMember> members; ///< filled only with track_members

    [[nodiscard]] std::size_t depth() const { return word.size(); }
};

struct LevelStats {
    std::size_t depth = 0;
    std::size_t candidates = 0; ///< surviving the threshold, before merging
    std::size_t pruned = 0;
    std::size_t merged = 0;
    std::size_t groups = 0;
    double raw_members = 0.0; ///< raw sequences represented by the groups
};

inline double term_norm(const ComplexMatrix &m, NormKind kind) {
    return kind == NormKind::frobenius ? m.norm() : linalg::spectral_norm(m);
}

/// Breadth-first expansion of Kraus products with threshold pruning at every
/// depth and merging of scalar-proportional products.
class ProductExpander {
  public:
    explicit ProductExpander(Eigen::Index dim, PruningPolicy policy = {})
        : dim_(dim), policy_(policy) {
        policy_.validate();
        TermProduct root;
        root.representative = linalg::identity(dim);
        if (policy_.track_members) root.members.push_back({});
        terms_.push_back(std::move(root));
        multiplicity_.push_back(1.0);
    }

    /// Extends every term by one Kraus operator of `ks` (applied last).
    const LevelStats &advance(const KrausSet &ks) {
        if (ks.dim() != dim_) {
            fail(ErrorCode::DimensionMismatch,
                 "ProductExpander: Kraus set dimension differs");
        }
        LevelStats stats;
        stats.depth = depth_ + 1;

        std::vector<TermProduct> next;
        std::vector<double> next_mult;
        std::unordered_map<std::uint64_t, std::vector<std::size_t>> table;

        for (std::size_t t = 0; t < terms_.size(); ++t) {
            const TermProduct &parent = terms_[t];
            const double parent_amp = std::sqrt(parent.weight);
            for (std::size_t j = 0; j < ks.ops.size(); ++j) {
                ComplexMatrix cand = ks.ops[j] * parent.representative;
                // group weight scales the effective norm of the candidate
                if (parent_amp * term_norm(cand, policy_.norm_kind) <=
                    policy_.norm_threshold) {
                    ++stats.pruned;
                    continue;
                }
                ++stats.candidates;

                const std::uint64_t key = fingerprint(cand);
                auto &bucket = table[key];
                bool merged = false;
                for (std::size_t idx : bucket) {
                    Complex c;
                    if (proportional(next[idx].representative, cand, c)) {
                        TermProduct &group = next[idx];
                        group.weight += parent.weight * std::norm(c);
                        next_mult[idx] += multiplicity_[t];
                        if (policy_.track_members) {
                            for (const auto &m : parent.members) {
                                group.members.push_back(
                                    {extend(m.word, j), m.scale * c});
                            }
                        }
                        merged = true;
                        ++stats.merged;
                        break;
                    }
                }
                if (merged) continue;

                TermProduct child;
                child.representative = std::move(cand);
                child.weight = parent.weight;
                child.word = extend(parent.word, j);
                if (policy_.track_members) {
                    child.members.reserve(parent.members.size());
                    for (const auto &m : parent.members) {
                        child.members.push_back({extend(m.word, j), m.scale});
                    }
                }
                bucket.push_back(next.size());
                next.push_back(std::move(child));
                next_mult.push_back(multiplicity_[t]);
            }
        }

        terms_ = std::move(next);
        multiplicity_ = std::move(next_mult);
        ++depth_;
        stats.groups = terms_.size();
        for (double m : multiplicity_) stats.raw_members += m;
        history_.push_back(stats);
        return history_.back();
    }

    [[nodiscard]] const std::vector<TermProduct> &terms() const { return terms_; }
    [[nodiscard]] std::size_t depth() const { return depth_; }
    [[nodiscard]] const std::vector<LevelStats> &history() const {
        return history_;
    }
    [[nodiscard]] std::size_t total_pruned() const {
        std::size_t n = 0;
        for (const auto &s : history_) n += s.pruned;
        return n;
    }
    [[nodiscard]] const PruningPolicy &policy() const { return policy_; }

  private:
    static std::vector<int> extend(const std::vector<int> &word, std::size_t j) {
        std::vector<int> w;
        w.reserve(word.size() + 1);
        w = word;
        w.push_back(static_cast<int>(j));
        return w;
    }

    /// Hash of the zero pattern; entries at or below grouping_tol count as 0.
    [[nodiscard]] std::uint64_t fingerprint(const ComplexMatrix &m) const {
        std::uint64_t h = 1469598103934665603ULL;
        for (Eigen::Index i = 0; i < m.size(); ++i) {
            const bool nz = std::abs(m.data()[i]) > policy_.grouping_tol;
            h ^= nz ? 0x9e3779b97f4a7c15ULL : 0x2545f4914f6cdd1dULL;
            h *= 1099511628211ULL;
        }
        return h;
    }

    /// True when cand = c * rep within grouping_tol; c is read off the
    /// largest-magnitude entry of rep.
    [[nodiscard]] bool proportional(const ComplexMatrix &rep,
                                    const ComplexMatrix &cand, Complex &c) const {
        Eigen::Index r = 0, col = 0;
        rep.cwiseAbs().maxCoeff(&r, &col);
        const Complex pivot = rep(r, col);
        if (std::abs(pivot) == 0.0) return false;
        c = cand(r, col) / pivot;
        return (cand - c * rep).norm() <= policy_.grouping_tol;
    }

    Eigen::Index dim_;
    PruningPolicy policy_;
    std::size_t depth_ = 0;
    std::vector<TermProduct> terms_;
    std::vector<double> multiplicity_;
    std::vector<LevelStats> history_;
};

/// Depth-`steps` grouped products, using `first` for step 1 and `later` for
/// every subsequent step.
inline std::vector<TermProduct> enumerate_products(const KrausSet &first,
                                                   const KrausSet &later,
                                                   std::size_t steps,
                                                   const PruningPolicy &policy = {}) {
    if (steps == 0) fail(ErrorCode::BadStep, "enumerate_products: steps must be >= 1");
    ProductExpander ex(first.dim(), policy);
    ex.advance(first);
    for (std::size_t s = 1; s < steps; ++s) ex.advance(later);
    return ex.terms();
}

inline std::vector<TermProduct> enumerate_products(const KrausSet &ks,
                                                   std::size_t steps,
                                                   const PruningPolicy &policy = {}) {
    return enumerate_products(ks, ks, steps, policy);
}

/// sum_terms weight * T rho T^dagger
inline DensityMatrix sum_terms(const std::vector<TermProduct> &terms,
                               const DensityMatrix &rho) {
    const auto n = rho.dim();
    ComplexMatrix out = ComplexMatrix::Zero(n, n);
    for (const auto &t : terms) {
        if (t.representative.rows() != n) {
            fail(ErrorCode::DimensionMismatch, "sum_terms: dimension mismatch");
        }
        out.noalias() +=
            t.weight * (t.representative * rho.matrix() * t.representative.adjoint());
    }
    return DensityMatrix::unchecked(0.5 * (out + out.adjoint()));
}

/// Iterates apply_channel `steps` times, without pruning.
inline DensityMatrix evolve_operator_sum(const KrausSet &ks,
                                         const DensityMatrix &rho0,
                                         std::size_t steps) {
    if (ks.dim() != rho0.dim()) {
        fail(ErrorCode::DimensionMismatch,
             "evolve_operator_sum: dimension mismatch");
    }
    DensityMatrix rho = rho0;
    for (std::size_t s = 0; s < steps; ++s) rho = apply_channel(ks, rho);
    return rho;
}

/// Right-hand side of the Lindblad equation (H in eV, time in fs).
inline ComplexMatrix lindblad_rhs(const LindbladModel &model,
                                  const ComplexMatrix &rho,
                                  double hbar = kHbarEvFs) {
    const Complex minus_i_over_hbar(0.0, -1.0 / hbar);
    ComplexMatrix d = minus_i_over_hbar *
                      (model.hamiltonian * rho - rho * model.hamiltonian);
    for (const auto &j : model.jumps) {
        if (j.rate_per_fs == 0.0) continue;
        const ComplexMatrix ldl = j.op.adjoint() * j.op;
        d.noalias() += j.rate_per_fs * (j.op * rho * j.op.adjoint() -
                                        0.5 * (ldl * rho + rho * ldl));
    }
    return d;
}

/// Number of whole steps of size dt in total_t; total_t/dt must be an
/// integer to relative precision 1e-9.
inline std::size_t whole_steps(double total_t, double dt) {
    if (!(dt > 0.0) || !std::isfinite(dt) || !(total_t >= dt) ||
        !std::isfinite(total_t)) {
        fail(ErrorCode::BadStep, "need dt > 0 and total_t >= dt");
    }
    const double q = total_t / dt;
    const double n = std::round(q);
    if (std::abs(q - n) > 1e-9 * n) {
        fail(ErrorCode::BadStep, "total_t is not an integer multiple of dt");
    }
    return static_cast<std::size_t>(n);
}

/// Explicit Euler trajectory of the Lindblad equation, including rho0.
inline std::vector<DensityMatrix> evolve_lindblad_euler(const LindbladModel &model,
                                                        const DensityMatrix &rho0,
                                                        double total_t, double dt,
                                                        double hbar = kHbarEvFs) {
    model.validate();
    if (model.dim() != rho0.dim()) {
        fail(ErrorCode::DimensionMismatch,
             "evolve_lindblad_euler: dimension mismatch");
    }
    const std::size_t steps = whole_steps(total_t, dt);
    std::vector<DensityMatrix> traj;
    traj.reserve(steps + 1);
    traj.push_back(rho0);
    ComplexMatrix rho = rho0.matrix();
    for (std::size_t s = 0; s < steps; ++s) {
        rho += dt * lindblad_rhs(model, rho, hbar);
        traj.push_back(DensityMatrix::unchecked(rho));
    }
    return traj;
}

} // namespace kdsim
