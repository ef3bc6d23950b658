// Command-line front end for the kdsim library.
//
//   kdsim fmo --preset fmo-default --mode sampled --seed 7 -o out.csv
//   kdsim terms --preset fmo-default --steps 6 --threshold 0.01
//   kdsim evolve --model damping.json --steps 0

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include <kdsim/cli.hpp>

namespace {

struct Flags {
    std::string config;
    std::string preset;
    std::string model;
    double dt_fs = 0.0;
    double dt_au = 0.0;
    double total_t_fs = 0.0;
    std::size_t steps = 0;
    std::uint64_t shots = 0;
    double threshold = 0.0;
    std::string norm;
    std::uint64_t seed = 0;
    std::string mode;
    std::size_t initial_state = 0;
    std::string observable;
    std::string output;
};

void add_common(CLI::App *sub, Flags &f) {
    sub->add_option("--config", f.config, "RunConfig JSON file");
    sub->add_option("--preset", f.preset, "built-in model (fmo-default, amplitude-damping)");
    sub->add_option("--model", f.model, "LindbladModel JSON file");
    sub->add_option("--dt-fs", f.dt_fs, "time step in fs");
    sub->add_option("--dt-au", f.dt_au, "time step in atomic units");
    sub->add_option("--total-t-fs", f.total_t_fs, "total time in fs (reference)");
    sub->add_option("--steps", f.steps, "number of Kraus steps");
    sub->add_option("--shots", f.shots, "shots per term (sampled mode)");
    sub->add_option("--threshold", f.threshold, "norm threshold for pruning");
    sub->add_option("--norm", f.norm, "pruning norm: frobenius or spectral");
    sub->add_option("--seed", f.seed, "sampling seed");
    sub->add_option("--mode", f.mode, "exact or sampled");
    sub->add_option("--initial-state", f.initial_state, "initial basis state index");
    sub->add_option("--observable", f.observable,
                    "'hamiltonian' or a matrix JSON file (expectation)");
    sub->add_option("-o,--output", f.output, "output file (default stdout)");
}

kdsim::cli::RunConfig to_config(const CLI::App &sub, const Flags &f) {
    using namespace kdsim;
    cli::RunConfig c;
    if (!f.config.empty()) c = cli::config_from_json(io::parse_json_file(f.config));
    c.command = cli::parse_command(sub.get_name());
    auto given = [&](const char *name) { return sub.count(name) > 0; };
    if (given("--preset")) c.preset = f.preset;
    if (given("--model")) c.model_path = f.model;
    if (given("--dt-fs")) c.dt_fs = f.dt_fs;
    if (given("--dt-au")) c.dt_fs = f.dt_au * kFsPerAtomicUnit;
    if (given("--total-t-fs")) c.total_t_fs = f.total_t_fs;
    if (given("--steps")) c.steps = f.steps;
    if (given("--shots")) c.shots = f.shots;
    if (given("--threshold")) c.threshold = f.threshold;
    if (given("--norm")) c.norm_kind = io::parse_norm_kind(f.norm);
    if (given("--seed")) c.seed = f.seed;
    if (given("--mode")) c.mode = io::parse_mode(f.mode);
    if (given("--initial-state")) c.initial_state = f.initial_state;
    if (given("--observable")) c.observable = f.observable;
    if (given("--output")) c.output = f.output;
    return c;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Open quantum dynamics via Kraus products and unitary dilation"};
    app.require_subcommand(1);
    Flags flags;
    for (const char *name : {"evolve", "reference", "fmo", "terms", "expectation"}) {
        add_common(app.add_subcommand(name), flags);
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        std::cerr << "error code=cli.ConfigInvalid message=\"" << e.what() << "\"\n";
        return 2;
    }

    const CLI::App *sub = app.get_subcommands().front();
    kdsim::cli::RunConfig config;
    try {
        config = to_config(*sub, flags);
    } catch (const kdsim::Error &e) {
        std::cerr << "error code=" << e.code_name() << " message=\"" << e.what() << "\"\n";
        return 2;
    }
    return kdsim::cli::run(config, std::cout, std::cerr);
}
