#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>

#include "io.hpp"

namespace kdsim::cli {

using io::json;

enum class Command { evolve, reference, fmo, terms, expectation };

inline Command parse_command(const std::string &s) {
    if (s == "evolve") return Command::evolve;
    if (s == "reference") return Command::reference;
    if (s == "fmo") return Command::fmo;
    if (s == "terms") return Command::terms;
    if (s == "expectation") return Command::expectation;
    fail(ErrorCode::ConfigInvalid, "unknown command '" + s + "'");
}

/// Comparison value for the 6-step FMO grouped term count at threshold 0.01.
inline constexpr std::size_t kReferenceTermCount = 679;

struct RunConfig {
    Command command = Command::evolve;
    std::string preset;     ///< built-in model name
    std::string model_path; ///< LindbladModel JSON file
    std::optional<double> dt_fs;
    std::optional<double> total_t_fs;
    std::size_t steps = 6;
    std::uint64_t shots = kDefaultShots;
    double threshold = 0.01;
    NormKind norm_kind = NormKind::frobenius;
    std::uint64_t seed = 0;
    EstimationMode mode = EstimationMode::exact;
    std::size_t initial_state = 1;
    std::string observable = "hamiltonian"; ///< or a path to a matrix JSON file
    std::string output;                     ///< empty: write to the given stream

    void validate() const {
        if (preset.empty() == model_path.empty()) {
            fail(ErrorCode::ConfigInvalid, "give exactly one of --preset or --model");
        }
        if (dt_fs && !(*dt_fs > 0.0 && std::isfinite(*dt_fs))) {
            fail(ErrorCode::ConfigInvalid, "dt must be positive");
        }
        if (total_t_fs && !(*total_t_fs > 0.0 && std::isfinite(*total_t_fs))) {
            fail(ErrorCode::ConfigInvalid, "total time must be positive");
        }
        if (shots == 0) fail(ErrorCode::ConfigInvalid, "shots must be positive");
        if (!(threshold >= 0.0)) {
            fail(ErrorCode::ConfigInvalid, "threshold must be non-negative");
        }
    }
};

/// RunConfig JSON wrapper; keys mirror the long flag names with underscores.
inline RunConfig config_from_json(const json &j) {
    RunConfig c;
    try {
        if (j.contains("command")) c.command = parse_command(j.at("command").get<std::string>());
        c.preset = j.value("preset", c.preset);
        c.model_path = j.value("model", c.model_path);
        if (j.contains("dt_fs")) c.dt_fs = j.at("dt_fs").get<double>();
        if (j.contains("dt_au")) c.dt_fs = j.at("dt_au").get<double>() * kFsPerAtomicUnit;
        if (j.contains("total_t_fs")) c.total_t_fs = j.at("total_t_fs").get<double>();
        c.steps = j.value("steps", c.steps);
        c.shots = j.value("shots", c.shots);
        c.threshold = j.value("threshold", c.threshold);
        if (j.contains("norm")) c.norm_kind = io::parse_norm_kind(j.at("norm").get<std::string>());
        c.seed = j.value("seed", c.seed);
        if (j.contains("mode")) c.mode = io::parse_mode(j.at("mode").get<std::string>());
        c.initial_state = j.value("initial_state", c.initial_state);
        c.observable = j.value("observable", c.observable);
        c.output = j.value("output", c.output);
    } catch (const json::exception &e) {
        fail(ErrorCode::ConfigInvalid, std::string("run config: ") + e.what());
    }
    return c;
}

namespace detail {

inline LindbladModel load_model(const RunConfig &c) {
    if (!c.preset.empty()) return io::preset_model(c.preset);
    return io::model_from_json(io::parse_json_file(c.model_path));
}

inline double step_fs(const RunConfig &c) {
    return c.dt_fs.value_or(fmo::kLaterStepAu * kFsPerAtomicUnit);
}

inline InitialEnsemble initial_ensemble(const RunConfig &c, Eigen::Index dim) {
    if (static_cast<Eigen::Index>(c.initial_state) >= dim) {
        fail(ErrorCode::ConfigInvalid, "initial state index exceeds model dimension");
    }
    return InitialEnsemble::basis(dim, static_cast<Eigen::Index>(c.initial_state));
}

inline ComplexMatrix load_observable(const RunConfig &c, const LindbladModel &m) {
    if (c.observable == "hamiltonian") return m.hamiltonian;
    return io::matrix_from_json(io::parse_json_file(c.observable), m.dim());
}

inline std::string run_evolve(const RunConfig &c) {
    const LindbladModel model = load_model(c);
    const auto n = model.dim();
    const double dt = step_fs(c);
    const InitialEnsemble ensemble = initial_ensemble(c, n);
    std::vector<std::string> header{"step", "t_fs"};
    for (Eigen::Index i = 0; i < n; ++i) header.push_back("pop" + std::to_string(i));
    for (const char *h : {"n_terms", "mode", "seed"}) header.emplace_back(h);
    io::CsvTable csv(header);

    auto emit = [&](std::size_t step, const std::vector<TermProduct> &terms) {
        const RealVector pops = estimate_diagonal(terms, ensemble, c.shots,
                                                  derive_key(c.seed, step), c.mode);
        std::vector<std::string> row{std::to_string(step),
                                     io::format_double(static_cast<double>(step) * dt)};
        for (Eigen::Index i = 0; i < n; ++i) row.push_back(io::format_double(pops(i)));
        row.push_back(std::to_string(terms.size()));
        row.push_back(io::mode_name(c.mode));
        row.push_back(std::to_string(c.seed));
        csv.add_row(std::move(row));
    };

    emit(0, identity_terms(n));
    if (c.steps > 0) {
        const KrausSet ks = kraus_from_lindblad(model, dt, true);
        ProductExpander ex(n, PruningPolicy{c.threshold, 1e-9, c.norm_kind});
        for (std::size_t s = 1; s <= c.steps; ++s) {
            ex.advance(ks);
            emit(s, ex.terms());
        }
    }
    return csv.str();
}

inline std::string run_reference(const RunConfig &c) {
    const LindbladModel model = load_model(c);
    const auto n = model.dim();
    const double dt = c.dt_fs.value_or(10.0 * kFsPerAtomicUnit);
    const double total = c.total_t_fs.value_or(static_cast<double>(c.steps) *
                                               fmo::kLaterStepAu * kFsPerAtomicUnit);
    const DensityMatrix rho0 = pure_state_density(initial_ensemble(c, n));
    const auto traj = evolve_lindblad_euler(model, rho0, total, dt);

    std::vector<std::string> header{"t_fs"};
    for (Eigen::Index i = 0; i < n; ++i) header.push_back("pop" + std::to_string(i));
    header.emplace_back("energy_ev");
    io::CsvTable csv(header);
    for (std::size_t s = 0; s < traj.size(); ++s) {
        std::vector<std::string> row{io::format_double(static_cast<double>(s) * dt)};
        const RealVector pops = traj[s].populations();
        for (Eigen::Index i = 0; i < n; ++i) row.push_back(io::format_double(pops(i)));
        row.push_back(io::format_double(
            (model.hamiltonian * traj[s].matrix()).trace().real()));
        csv.add_row(std::move(row));
    }
    return csv.str();
}

inline std::string run_fmo(const RunConfig &c) {
    if (c.preset != "fmo-default") {
        fail(ErrorCode::ConfigInvalid, "fmo command requires --preset fmo-default");
    }
    fmo::ExperimentOptions opt;
    opt.initial_site = static_cast<Eigen::Index>(c.initial_state);
    opt.shots = c.shots;
    opt.threshold = c.threshold;
    opt.norm_kind = c.norm_kind;
    opt.seed = c.seed;
    opt.mode = c.mode;
    return io::fmo_csv(fmo::run_fmo_experiment({}, opt), c.mode, c.seed).str();
}

inline std::string run_terms(const RunConfig &c) {
    const LindbladModel model = load_model(c);
    const double dt = step_fs(c);
    const KrausSet ks = kraus_from_lindblad(model, dt, true);
    ProductExpander ex(model.dim(), PruningPolicy{c.threshold, 1e-9, c.norm_kind});
    for (std::size_t s = 0; s < c.steps; ++s) ex.advance(ks);

    json levels = json::array();
    for (const auto &st : ex.history()) {
        levels.push_back({{"depth", st.depth},
                          {"groups", st.groups},
                          {"candidates", st.candidates},
                          {"pruned", st.pruned},
                          {"merged", st.merged},
                          {"raw_members", st.raw_members}});
    }
    json terms = json::array();
    for (const auto &t : ex.terms()) terms.push_back(io::term_to_json(t));

    json report{{"command", "terms"},
                {"model", model.label},
                {"kraus_operators", ks.size()},
                {"dt_fs", dt},
                {"steps", c.steps},
                {"threshold", c.threshold},
                {"norm", io::norm_kind_name(c.norm_kind)},
                {"grouped_terms", ex.terms().size()},
                {"raw_candidates",
                 ex.history().empty() ? 0 : ex.history().back().candidates},
                {"raw_unpruned", std::pow(static_cast<double>(ks.size()),
                                          static_cast<double>(c.steps))},
                {"levels", levels},
                {"terms", terms}};
    if (c.preset == "fmo-default") report["reference_count"] = kReferenceTermCount;
    return report.dump(2) + "\n";
}

inline std::string run_expectation(const RunConfig &c) {
    const LindbladModel model = load_model(c);
    const auto n = model.dim();
    const double dt = step_fs(c);
    const InitialEnsemble ensemble = initial_ensemble(c, n);
    const ObservableSpec spec = shift_observable(load_observable(c, model));

    io::CsvTable csv({"step", "t_fs", "expectation", "reference", "n_terms", "mode", "seed"});
    DensityMatrix rho = pure_state_density(ensemble);
    auto emit = [&](std::size_t step, const std::vector<TermProduct> &terms) {
        const double value = estimate_expectation(spec, terms, ensemble, c.shots,
                                                  derive_key(c.seed, step), c.mode);
        const double ref = (spec.matrix * rho.matrix()).trace().real();
        csv.add_row({std::to_string(step),
                     io::format_double(static_cast<double>(step) * dt),
                     io::format_double(value), io::format_double(ref),
                     std::to_string(terms.size()), io::mode_name(c.mode),
                     std::to_string(c.seed)});
    };
    emit(0, identity_terms(n));
    if (c.steps > 0) {
        const KrausSet ks = kraus_from_lindblad(model, dt, true);
        ProductExpander ex(n, PruningPolicy{c.threshold, 1e-9, c.norm_kind});
        for (std::size_t s = 1; s <= c.steps; ++s) {
            ex.advance(ks);
            rho = apply_channel(ks, rho);
            emit(s, ex.terms());
        }
    }
    return csv.str();
}

} // namespace detail

inline std::string render(const RunConfig &c) {
    c.validate();
    switch (c.command) {
    case Command::evolve: return detail::run_evolve(c);
    case Command::reference: return detail::run_reference(c);
    case Command::fmo: return detail::run_fmo(c);
    case Command::terms: return detail::run_terms(c);
    case Command::expectation: return detail::run_expectation(c);
    }
    fail(ErrorCode::ConfigInvalid, "unhandled command");
}

/// Runs one command. Output goes to c.output (atomically) or to `out`;
/// failures print one "error code=<module.Code> message=..." line to `err`.
inline int run(const RunConfig &c, std::ostream &out, std::ostream &err) {
    try {
        const std::string text = render(c);
        if (c.output.empty()) {
            out << text;
        } else {
            io::write_atomic(c.output, text);
        }
        return 0;
    } catch (const Error &e) {
        err << "error code=" << e.code_name() << " message=\"" << e.what() << "\"\n";
        return e.code() == ErrorCode::ConfigInvalid ||
                       e.code() == ErrorCode::ModelNotFound
                   ? 2
                   : 1;
    } catch (const std::exception &e) {
        err << "error code=internal message=\"" << e.what() << "\"\n";
        return 1;
    }
}

} // namespace kdsim::cli
