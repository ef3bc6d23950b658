#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "channels.hpp"
#include "evolution.hpp"
#include "fmo.hpp"
#include "measurement.hpp"

namespace kdsim::io {

using nlohmann::json;

/// Shortest decimal that round-trips to the same double.
inline std::string format_double(double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

/// Row-major list of dim*dim [re, im] pairs.
inline json matrix_to_json(const ComplexMatrix &m) {
    json out = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            out.push_back({m(i, j).real(), m(i, j).imag()});
        }
    }
    return out;
}

namespace detail {
inline Complex entry_from_json(const json &e) {
    if (e.is_number()) return {e.get<double>(), 0.0};
    if (e.is_array() && e.size() == 2 && e[0].is_number() && e[1].is_number()) {
        return {e[0].get<double>(), e[1].get<double>()};
    }
    fail(ErrorCode::ConfigInvalid, "matrix entry must be [re, im] or a number");
}
} // namespace detail

/// Accepts the flat row-major pair list, or a nested list of rows.
inline ComplexMatrix matrix_from_json(const json &j, Eigen::Index dim) {
    if (!j.is_array()) fail(ErrorCode::ConfigInvalid, "matrix must be a JSON array");
    ComplexMatrix m(dim, dim);
    const auto n = static_cast<std::size_t>(dim);
    // flat lists have n*n entries, so length n with rows of length n is nested
    const bool nested = j.size() == n && n > 0 && j[0].is_array() && j[0].size() == n;
    if (nested) {
        for (std::size_t r = 0; r < n; ++r) {
            if (!j[r].is_array() || j[r].size() != n) {
                fail(ErrorCode::ConfigInvalid, "matrix row has the wrong length");
            }
            for (std::size_t c = 0; c < n; ++c) {
                m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                    detail::entry_from_json(j[r][c]);
            }
        }
        return m;
    }
    if (j.size() != n * n) {
        fail(ErrorCode::ConfigInvalid, "matrix needs dim*dim entries, got " +
                                           std::to_string(j.size()));
    }
    for (std::size_t k = 0; k < n * n; ++k) {
        m(static_cast<Eigen::Index>(k / n), static_cast<Eigen::Index>(k % n)) =
            detail::entry_from_json(j[k]);
    }
    return m;
}

inline json model_to_json(const LindbladModel &model) {
    json jumps = json::array();
    for (const auto &jp : model.jumps) {
        jumps.push_back({{"op", matrix_to_json(jp.op)}, {"rate_per_fs", jp.rate_per_fs}});
    }
    return {{"dim", model.dim()},
            {"hamiltonian_ev", matrix_to_json(model.hamiltonian)},
            {"jumps", jumps},
            {"label", model.label}};
}

inline LindbladModel model_from_json(const json &j) {
    try {
        const auto dim = j.at("dim").get<Eigen::Index>();
        if (dim < 1) fail(ErrorCode::ConfigInvalid, "model dim must be >= 1");
        LindbladModel m;
        m.hamiltonian = matrix_from_json(j.at("hamiltonian_ev"), dim);
        for (const auto &jp : j.value("jumps", json::array())) {
            m.jumps.push_back({matrix_from_json(jp.at("op"), dim),
                               jp.at("rate_per_fs").get<double>()});
        }
        m.label = j.value("label", std::string{});
        m.validate();
        return m;
    } catch (const json::exception &e) {
        fail(ErrorCode::ConfigInvalid, std::string("model JSON: ") + e.what());
    }
}

inline std::string read_file(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::ModelNotFound, "cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline json parse_json_file(const std::string &path) {
    const std::string text = read_file(path);
    try {
        return json::parse(text);
    } catch (const json::exception &e) {
        fail(ErrorCode::ConfigInvalid, path + ": " + e.what());
    }
}

inline LindbladModel amplitude_damping_model(double rate_per_fs = 1.52e-2) {
    LindbladModel m;
    m.hamiltonian = ComplexMatrix::Zero(2, 2);
    m.jumps.push_back({linalg::basis_op(2, 0, 1), rate_per_fs});
    m.label = "amplitude-damping";
    return m;
}

/// Built-in models: "fmo-default", "amplitude-damping".
inline LindbladModel preset_model(const std::string &name) {
    if (name == "fmo-default") return fmo::build_fmo_model();
    if (name == "amplitude-damping") return amplitude_damping_model();
    fail(ErrorCode::ModelNotFound, "unknown preset '" + name + "'");
}

inline json term_to_json(const TermProduct &t) {
    return {{"word", t.word},
            {"weight", t.weight},
            {"frobenius_norm", t.representative.norm()}};
}

inline json record_to_json(const MeasurementRecord &rec) {
    json counts = json::object();
    for (const auto &[k, c] : rec.counts) counts[std::to_string(k)] = c;
    return {{"seed", rec.seed}, {"shots", rec.shots}, {"counts", counts}};
}

inline MeasurementRecord record_from_json(const json &j, std::size_t dim) {
    MeasurementRecord rec;
    rec.seed = j.at("seed").get<std::uint64_t>();
    rec.shots = j.at("shots").get<std::uint64_t>();
    rec.dim = dim;
    for (const auto &[k, c] : j.at("counts").items()) {
        rec.counts.emplace(std::stoul(k), c.get<std::uint64_t>());
    }
    return rec;
}

/// Comma-separated rows with a fixed header.
class CsvTable {
  public:
    explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

    void add_row(std::vector<std::string> row) {
        if (row.size() != header_.size()) {
            fail(ErrorCode::IoError, "CsvTable: row width differs from header");
        }
        rows_.push_back(std::move(row));
    }

    [[nodiscard]] std::string str() const {
        std::string out;
        auto line = [&out](const std::vector<std::string> &fields) {
            for (std::size_t i = 0; i < fields.size(); ++i) {
                if (i) out += ',';
                out += fields[i];
            }
            out += '\n';
        };
        line(header_);
        for (const auto &r : rows_) line(r);
        return out;
    }

    [[nodiscard]] std::size_t size() const { return rows_.size(); }

  private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

/// Writes via a sibling temp file and rename, so readers never see a
/// partial file.
inline void write_atomic(const std::string &path, const std::string &content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail(ErrorCode::IoError, "cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out) fail(ErrorCode::IoError, "write failed for " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp, ec);
        fail(ErrorCode::IoError, "cannot rename onto " + path);
    }
}

inline std::string mode_name(EstimationMode m) {
    return m == EstimationMode::exact ? "exact" : "sampled";
}

inline EstimationMode parse_mode(const std::string &s) {
    if (s == "exact") return EstimationMode::exact;
    if (s == "sampled") return EstimationMode::sampled;
    fail(ErrorCode::ConfigInvalid, "mode must be 'exact' or 'sampled'");
}

inline std::string norm_kind_name(NormKind k) {
    return k == NormKind::frobenius ? "frobenius" : "spectral";
}

inline NormKind parse_norm_kind(const std::string &s) {
    if (s == "frobenius") return NormKind::frobenius;
    if (s == "spectral") return NormKind::spectral;
    fail(ErrorCode::ConfigInvalid, "norm kind must be 'frobenius' or 'spectral'");
}

inline std::vector<std::string> fmo_csv_header() {
    std::vector<std::string> h{"t_fs"};
    for (int i = 0; i < 5; ++i) h.push_back("pop" + std::to_string(i));
    for (int i = 0; i < 5; ++i) h.push_back("pop_ref" + std::to_string(i));
    for (const char *c : {"energy_ev", "energy_ref_ev", "n_terms", "mode", "seed"}) {
        h.emplace_back(c);
    }
    return h;
}

inline CsvTable fmo_csv(const fmo::ExperimentTable &table, EstimationMode mode,
                        std::uint64_t seed) {
    CsvTable csv(fmo_csv_header());
    for (const auto &r : table.rows) {
        std::vector<std::string> row{format_double(r.t_fs)};
        for (double p : r.pop) row.push_back(format_double(p));
        for (double p : r.pop_ref) row.push_back(format_double(p));
        row.push_back(format_double(r.energy_ev));
        row.push_back(format_double(r.energy_ref_ev));
        row.push_back(std::to_string(r.n_terms));
        row.push_back(mode_name(mode));
        row.push_back(std::to_string(seed));
        csv.add_row(std::move(row));
    }
    return csv;
}

} // namespace kdsim::io
