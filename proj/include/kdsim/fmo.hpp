#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <vector>

#include "channels.hpp"
#include "evolution.hpp"
#include "measurement.hpp"

namespace kdsim::fmo {

/// Levels: 0 ground, 1-3 chromophores, 4 sink.
inline constexpr Eigen::Index kLevels = 5;

inline ComplexMatrix default_hamiltonian() {
    ComplexMatrix h = ComplexMatrix::Zero(kLevels, kLevels);
    h(1, 1) = 0.0267;
    h(2, 2) = 0.0273;
    h(1, 2) = h(2, 1) = -0.0129;
    h(1, 3) = h(3, 1) = 0.000632;
    h(2, 3) = h(3, 2) = 0.00404;
    return h;
}

struct FmoParams {
    ComplexMatrix hamiltonian = default_hamiltonian(); ///< eV
    double alpha = 3.00e-3; ///< dephasing, 1/fs
    double beta = 5.00e-7;  ///< dissipation to ground, 1/fs
    double gamma = 6.28e-3; ///< sink, 1/fs
    double dt_fs = 2000.0 * kFsPerAtomicUnit;

    void validate() const {
        linalg::require_hermitian(hamiltonian, kFactorTol, "FmoParams");
        if (hamiltonian.rows() != kLevels) {
            fail(ErrorCode::InvalidModel, "FmoParams: Hamiltonian must be 5x5");
        }
        if (hamiltonian.imag().cwiseAbs().maxCoeff() > 0.0) {
            fail(ErrorCode::InvalidModel, "FmoParams: Hamiltonian must be real");
        }
        const double outer = hamiltonian.row(0).cwiseAbs().sum() +
                             hamiltonian.row(kLevels - 1).cwiseAbs().sum();
        if (outer != 0.0) {
            fail(ErrorCode::InvalidModel,
                 "FmoParams: ground and sink must be uncoupled in H");
        }
        if (!(alpha >= 0.0 && beta >= 0.0 && gamma >= 0.0)) {
            fail(ErrorCode::InvalidModel, "FmoParams: negative rate");
        }
    }
};

/// Jump order: dephasing |i><i| (i = 1..3, rate alpha), dissipation |0><i|
/// (rate beta), sink |4><3| (rate gamma).
inline LindbladModel build_fmo_model(const FmoParams &params = {}) {
    params.validate();
    LindbladModel m;
    m.hamiltonian = params.hamiltonian;
    m.label = "fmo-default";
    for (Eigen::Index i = 1; i <= 3; ++i) {
        m.jumps.push_back({linalg::basis_op(kLevels, i, i), params.alpha});
    }
    for (Eigen::Index i = 1; i <= 3; ++i) {
        m.jumps.push_back({linalg::basis_op(kLevels, 0, i), params.beta});
    }
    m.jumps.push_back({linalg::basis_op(kLevels, 4, 3), params.gamma});
    return m;
}

inline constexpr double kFirstStepAu = 400.0;
inline constexpr double kLaterStepAu = 2000.0;
inline constexpr std::size_t kGroups = 5;
inline constexpr std::size_t kPointsPerGroup = 6;

struct ScheduleGroup {
    std::vector<double> offsets_au;
    std::vector<double> offsets_fs;
    double first_dt_fs = 0.0;
    double later_dt_fs = 0.0;
};

/// Group g (1-based) samples g*400 + k*2000 a.u. for k = 0..5; the five
/// groups interleave into 30 evenly spaced points on (0, 12000] a.u.
inline std::vector<ScheduleGroup> fmo_schedule() {
    std::vector<ScheduleGroup> groups;
    for (std::size_t g = 1; g <= kGroups; ++g) {
        ScheduleGroup grp;
        const double first_au = static_cast<double>(g) * kFirstStepAu;
        grp.first_dt_fs = first_au * kFsPerAtomicUnit;
        grp.later_dt_fs = kLaterStepAu * kFsPerAtomicUnit;
        for (std::size_t k = 0; k < kPointsPerGroup; ++k) {
            const double au = first_au + static_cast<double>(k) * kLaterStepAu;
            grp.offsets_au.push_back(au);
            grp.offsets_fs.push_back(au * kFsPerAtomicUnit);
        }
        groups.push_back(std::move(grp));
    }
    return groups;
}

struct ExperimentOptions {
    Eigen::Index initial_site = 1;
    std::uint64_t shots = kDefaultShots;
    double threshold = 0.01;
    NormKind norm_kind = NormKind::frobenius;
    std::uint64_t seed = 0;
    EstimationMode mode = EstimationMode::exact;
    /// Euler reference step; 10 a.u. (0.2419 fs) divides every offset.
    double reference_dt_au = 10.0;
};

struct FmoRow {
    double t_fs = 0.0;
    std::array<double, kLevels> pop{};
    std::array<double, kLevels> pop_ref{};
    double energy_ev = 0.0;
    double energy_ref_ev = 0.0;
    std::size_t n_terms = 0;
    std::size_t group = 0; ///< 1-based; 0 for the initial row
    std::size_t depth = 0;
};

struct ExperimentTable {
    FmoRow initial;           ///< t = 0, measured on the identity term
    std::vector<FmoRow> rows; ///< scheduled offsets, sorted by time
    std::vector<std::vector<LevelStats>> level_stats; ///< per group
};

namespace detail {
inline std::array<double, kLevels> to_array(const RealVector &v) {
    std::array<double, kLevels> a{};
    for (Eigen::Index i = 0; i < kLevels; ++i) a[static_cast<std::size_t>(i)] = v(i);
    return a;
}
} // namespace detail

inline ExperimentTable run_fmo_experiment(const FmoParams &params = {},
                                          const ExperimentOptions &opt = {}) {
    if (opt.initial_site < 1 || opt.initial_site > 3) {
        fail(ErrorCode::ConfigInvalid, "run_fmo_experiment: initial_site must be 1..3");
    }
    const LindbladModel model = build_fmo_model(params);
    const InitialEnsemble ensemble = InitialEnsemble::basis(kLevels, opt.initial_site);
    const DensityMatrix rho0 = pure_state_density(ensemble);
    const ObservableSpec energy = shift_observable(model.hamiltonian);
    const auto schedule = fmo_schedule();

    // one reference trajectory covers every offset
    const double last_au = schedule.back().offsets_au.back();
    const auto ref = evolve_lindblad_euler(model, rho0, last_au * kFsPerAtomicUnit,
                                           opt.reference_dt_au * kFsPerAtomicUnit);
    auto reference_at = [&](double au) -> const DensityMatrix & {
        return ref.at(static_cast<std::size_t>(std::llround(au / opt.reference_dt_au)));
    };

    PruningPolicy policy;
    policy.norm_threshold = opt.threshold;
    policy.norm_kind = opt.norm_kind;

    auto measure = [&](FmoRow &row, const std::vector<TermProduct> &terms,
                       const DensityMatrix &reference, std::uint64_t key) {
        row.pop = detail::to_array(
            estimate_diagonal(terms, ensemble, opt.shots, derive_key(key, 0), opt.mode));
        row.energy_ev = estimate_expectation(energy, terms, ensemble, opt.shots,
                                             derive_key(key, 1), opt.mode);
        row.pop_ref = detail::to_array(reference.populations());
        row.energy_ref_ev = (model.hamiltonian * reference.matrix()).trace().real();
        row.n_terms = terms.size();
    };

    ExperimentTable table;
    measure(table.initial, identity_terms(kLevels), rho0, derive_key(opt.seed, 0, 0));

    for (std::size_t g = 0; g < schedule.size(); ++g) {
        const auto &grp = schedule[g];
        const KrausSet first = kraus_from_lindblad(model, grp.first_dt_fs, true);
        const KrausSet later = kraus_from_lindblad(model, grp.later_dt_fs, true);
        ProductExpander ex(kLevels, policy);
        for (std::size_t k = 0; k < grp.offsets_au.size(); ++k) {
            ex.advance(k == 0 ? first : later);
            FmoRow row;
            row.t_fs = grp.offsets_fs[k];
            row.group = g + 1;
            row.depth = k + 1;
            measure(row, ex.terms(), reference_at(grp.offsets_au[k]),
                    derive_key(opt.seed, g + 1, k + 1));
            table.rows.push_back(row);
        }
        table.level_stats.push_back(ex.history());
    }
    std::sort(table.rows.begin(), table.rows.end(),
              [](const FmoRow &a, const FmoRow &b) { return a.t_fs < b.t_fs; });
    return table;
}

} // namespace kdsim::fmo
