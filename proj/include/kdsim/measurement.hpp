#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "channels.hpp"
#include "dilation.hpp"
#include "evolution.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace kdsim {

enum class EstimationMode { exact, sampled };

inline constexpr std::uint64_t kDefaultShots = 9216;

struct MeasurementRecord {
    std::map<std::size_t, std::uint64_t> counts; ///< absent outcomes were never seen
    std::uint64_t shots = 0;
    std::uint64_t seed = 0;
    std::size_t dim = 0;

    [[nodiscard]] std::uint64_t count(std::size_t outcome) const {
        auto it = counts.find(outcome);
        return it == counts.end() ? 0 : it->second;
    }
    [[nodiscard]] double frequency(std::size_t outcome) const {
        return static_cast<double>(count(outcome)) / static_cast<double>(shots);
    }
    /// Fraction of shots landing in outcomes [0, n).
    [[nodiscard]] double subspace_frequency(std::size_t n) const {
        std::uint64_t hits = 0;
        for (const auto &[k, c] : counts) {
            if (k < n) hits += c;
        }
        return static_cast<double>(hits) / static_cast<double>(shots);
    }
};

/// Cached pieces of the shifted observable (A + ||A|| I) / (2 ||A||) = L L^dagger.
struct ObservableSpec {
    ComplexMatrix matrix;
    double norm = 0.0;
    ComplexMatrix shifted;
    ComplexMatrix factor;

    /// <A> from <shifted>.
    [[nodiscard]] double recover(double shifted_expectation) const {
        return 2.0 * norm * shifted_expectation - norm;
    }
};

inline StateVector simulate_exact(const DilatedUnitary &u, const StateVector &v) {
    if (u.matrix.cols() != v.size()) {
        fail(ErrorCode::DimensionMismatch, "simulate_exact: dimension mismatch");
    }
    if (std::abs(v.norm() - 1.0) > 1e-12) {
        fail(ErrorCode::NotNormalized, "simulate_exact: input is not normalized");
    }
    return u.matrix * v;
}

/// Draws `shots` projective outcomes from |state_i|^2. Deterministic in seed.
inline MeasurementRecord sample_counts(const StateVector &state,
                                       std::uint64_t shots, std::uint64_t seed) {
    if (shots == 0) {
        fail(ErrorCode::ConfigInvalid, "sample_counts: shots must be positive");
    }
    const auto n = static_cast<std::size_t>(state.size());
    std::vector<double> cdf(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        total += std::norm(state(static_cast<Eigen::Index>(i)));
        cdf[i] = total;
    }
    if (!(std::abs(total - 1.0) <= 1e-8)) {
        fail(ErrorCode::NotNormalized, "sample_counts: probabilities sum to " +
                                           std::to_string(total));
    }
    for (auto &c : cdf) c /= total;
    cdf.back() = 1.0;

    MeasurementRecord rec;
    rec.shots = shots;
    rec.seed = seed;
    rec.dim = n;
    CounterRng rng(seed);
    std::vector<std::uint64_t> tally(n, 0);
    for (std::uint64_t s = 0; s < shots; ++s) {
        const double u = rng.uniform();
        const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        ++tally[static_cast<std::size_t>(it - cdf.begin())];
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (tally[i] > 0) rec.counts.emplace(i, tally[i]);
    }
    return rec;
}

namespace detail {
inline void require_terms_dim(const std::vector<TermProduct> &terms,
                              const InitialEnsemble &ensemble, const char *what) {
    for (const auto &t : terms) {
        if (t.representative.rows() != ensemble.dim() ||
            t.representative.cols() != ensemble.dim()) {
            fail(ErrorCode::DimensionMismatch,
                 std::string(what) + ": term and ensemble dimensions differ");
        }
    }
}
} // namespace detail

/// diag(rho) from first-half projection measurements of each dilated term
/// applied to each embedded ensemble member.
inline RealVector estimate_diagonal(const std::vector<TermProduct> &terms,
                                    const InitialEnsemble &ensemble,
                                    std::uint64_t shots_per_term,
                                    std::uint64_t seed, EstimationMode mode) {
    detail::require_terms_dim(terms, ensemble, "estimate_diagonal");
    const auto n = ensemble.dim();
    const auto &members = ensemble.components();
    std::vector<RealVector> partial(terms.size(), RealVector::Zero(n));

    parallel_for(terms.size(), [&](std::size_t t) {
        const DilatedUnitary u = dilate(terms[t].representative);
        const double w = terms[t].weight * u.weight_scale;
        for (std::size_t i = 0; i < members.size(); ++i) {
            const StateVector out = simulate_exact(u, embed_state(members[i].state));
            const double scale = members[i].weight * w;
            if (mode == EstimationMode::exact) {
                partial[t] += scale * out.head(n).cwiseAbs2();
            } else {
                const auto rec =
                    sample_counts(out, shots_per_term, derive_key(seed, t, i));
                for (Eigen::Index k = 0; k < n; ++k) {
                    partial[t](k) += scale * rec.frequency(static_cast<std::size_t>(k));
                }
            }
        }
    });

    RealVector diag = RealVector::Zero(n);
    for (const auto &p : partial) diag += p;
    return diag;
}

inline ObservableSpec shift_observable(const ComplexMatrix &a) {
    linalg::require_hermitian(a, kFactorTol, "shift_observable");
    ObservableSpec spec;
    spec.matrix = a;
    spec.norm = linalg::spectral_norm(a);
    if (spec.norm == 0.0) {
        fail(ErrorCode::ZeroObservable, "shift_observable: observable is zero");
    }
    const auto n = a.rows();
    ComplexMatrix shifted = (a + spec.norm * linalg::identity(n)) / (2.0 * spec.norm);
    spec.shifted = 0.5 * (shifted + shifted.adjoint());
    spec.factor = linalg::cholesky_psd(spec.shifted);
    return spec;
}

/// <shifted A> as the first-half probability of dilate(L^dagger T) applied
/// to each embedded ensemble member.
inline double estimate_shifted_expectation(const ObservableSpec &spec,
                                           const std::vector<TermProduct> &terms,
                                           const InitialEnsemble &ensemble,
                                           std::uint64_t shots_per_term,
                                           std::uint64_t seed,
                                           EstimationMode mode) {
    if (spec.matrix.rows() != ensemble.dim()) {
        fail(ErrorCode::DimensionMismatch,
             "estimate_expectation: observable and ensemble dimensions differ");
    }
    detail::require_terms_dim(terms, ensemble, "estimate_expectation");
    const auto n = ensemble.dim();
    const auto &members = ensemble.components();
    const ComplexMatrix ladj = spec.factor.adjoint();
    std::vector<double> partial(terms.size(), 0.0);

    parallel_for(terms.size(), [&](std::size_t t) {
        const DilatedUnitary u = dilate(ladj * terms[t].representative);
        const double w = terms[t].weight * u.weight_scale;
        for (std::size_t i = 0; i < members.size(); ++i) {
            const StateVector out = simulate_exact(u, embed_state(members[i].state));
            double p = 0.0;
            if (mode == EstimationMode::exact) {
                p = out.head(n).squaredNorm();
            } else {
                p = sample_counts(out, shots_per_term, derive_key(seed, t, i))
                        .subspace_frequency(static_cast<std::size_t>(n));
            }
            partial[t] += members[i].weight * w * p;
        }
    });

    double acc = 0.0;
    for (double p : partial) acc += p;
    return acc;
}

inline double estimate_expectation(const ObservableSpec &spec,
                                   const std::vector<TermProduct> &terms,
                                   const InitialEnsemble &ensemble,
                                   std::uint64_t shots_per_term, std::uint64_t seed,
                                   EstimationMode mode) {
    return spec.recover(
        estimate_shifted_expectation(spec, terms, ensemble, shots_per_term, seed, mode));
}

/// Single identity term: measurement of the initial state itself.
inline std::vector<TermProduct> identity_terms(Eigen::Index n) {
    TermProduct t;
    t.representative = linalg::identity(n);
    return {t};
}

} // namespace kdsim
