#pragma once

#include "pvqd/circuit.hpp"
#include "pvqd/errors.hpp"
#include "pvqd/exact.hpp"
#include "pvqd/metrics.hpp"
#include "pvqd/pvqd_driver.hpp"
#include "pvqd/tdva.hpp"

#include "json.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

// Experiment configuration, seeded orchestration, artifact persistence and figure tables.
namespace pvqd {

inline constexpr int kArtifactFormatVersion = 1;

enum class Algorithm { pvqd, tdva, exact };

inline std::string to_string(Algorithm a) {
    switch (a) {
    case Algorithm::pvqd: return "pvqd";
    case Algorithm::tdva: return "tdva";
    case Algorithm::exact: return "exact";
    }
    return "?";
}
inline std::string to_string(LossKind k) { return k == LossKind::global ? "global" : "local"; }
inline std::string to_string(OptimizerKind k) { return k == OptimizerKind::sgd ? "sgd" : "adam"; }
inline std::string to_string(AxisScheme s) { return s == AxisScheme::all_x ? "x" : "xy"; }

inline Algorithm parse_algorithm(std::string_view s, const std::string& field = "algorithm") {
    if (s == "pvqd") return Algorithm::pvqd;
    if (s == "tdva") return Algorithm::tdva;
    if (s == "exact") return Algorithm::exact;
    throw ValidationError(field, "expected pvqd, tdva or exact, got '" + std::string(s) + "'");
}
inline LossKind parse_loss(std::string_view s, const std::string& field = "pvqd.loss") {
    if (s == "global") return LossKind::global;
    if (s == "local") return LossKind::local;
    throw ValidationError(field, "expected global or local, got '" + std::string(s) + "'");
}
inline OptimizerKind parse_optimizer(std::string_view s, const std::string& field = "pvqd.optimizer.kind") {
    if (s == "sgd") return OptimizerKind::sgd;
    if (s == "adam") return OptimizerKind::adam;
    throw ValidationError(field, "expected sgd or adam, got '" + std::string(s) + "'");
}
inline AxisScheme parse_axis(std::string_view s, const std::string& field = "ansatz.axis") {
    if (s == "x") return AxisScheme::all_x;
    if (s == "xy") return AxisScheme::alternating_xy;
    throw ValidationError(field, "expected x or xy, got '" + std::string(s) + "'");
}

/// Options of the p-VQD inner loop that are not shared with the other algorithms.
struct PvqdOptions {
    double threshold = 1e-5;
    std::size_t max_iters = 1000;
    OptimizerSettings optimizer{OptimizerKind::sgd, 6e-4};
    bool warm_start = true;
    double random_guess_scale = 0.0;
    LossKind loss = LossKind::global;
    /// Stopping test on the exact loss; only gradients are sampled in shots mode.
    bool exact_readout = false;
    double shift = std::numbers::pi / 2;
    std::size_t trotter_substeps = 1;
    bool keep_loss_history = false;
};

struct TdvaOptions {
    double rcond = 1e-2;
};

/// One experiment: a single algorithm run once per seed.
struct ExperimentConfig {
    std::string name = "run";
    /// Figure table this run feeds, if any.
    std::string figure;
    TfimModel model;
    std::size_t depth = 3;
    AxisScheme axis = AxisScheme::alternating_xy;
    Algorithm algorithm = Algorithm::pvqd;
    double dt = 0.05;
    std::size_t n_steps = 60;
    /// Shots per circuit evaluation; 0 selects exact statevector readout.
    std::uint64_t shots = 0;
    PvqdOptions pvqd;
    TdvaOptions tdva;
    std::vector<std::uint64_t> seeds{0};
    /// Initial ansatz parameters; empty means all zeros (state |0...0>).
    std::vector<double> initial_params;
    std::string output_path;

    AnsatzSpec ansatz() const { return {model.num_spins, depth, axis}; }
    std::size_t num_params() const { return ansatz_param_count(ansatz()); }

    std::vector<double> initial_parameters() const {
        return initial_params.empty() ? std::vector<double>(num_params(), 0.0) : initial_params;
    }

    /// Throws ValidationError naming the offending field.
    void validate() const {
        if (name.empty()) throw ValidationError("name", "must not be empty");
        if (model.num_spins < 1) throw ValidationError("model.N", "must be >= 1");
        if (model.num_spins > kMaxExactQubits)
            throw ValidationError("model.N", "must be <= " + std::to_string(kMaxExactQubits) + " for the exact reference");
        if (!std::isfinite(model.coupling)) throw ValidationError("model.J", "must be finite");
        if (!std::isfinite(model.field)) throw ValidationError("model.h", "must be finite");
        if (!(dt > 0.0) || !std::isfinite(dt)) throw ValidationError("dt", "must be > 0");
        if (!initial_params.empty() && initial_params.size() != num_params())
            throw ValidationError("initial_params", "expected " + std::to_string(num_params()) + " values, got " +
                                                       std::to_string(initial_params.size()));
        if (seeds.empty()) throw ValidationError("seeds", "at least one seed is required");
        if (!(pvqd.threshold > 0.0)) throw ValidationError("pvqd.threshold", "must be > 0");
        if (pvqd.max_iters < 1) throw ValidationError("pvqd.max_iters", "must be >= 1");
        if (!(pvqd.optimizer.learning_rate > 0.0))
            throw ValidationError("pvqd.optimizer.learning_rate", "must be > 0");
        if (pvqd.random_guess_scale < 0.0) throw ValidationError("pvqd.random_guess_scale", "must be >= 0");
        if (std::abs(std::sin(pvqd.shift)) < 1e-12) throw ValidationError("pvqd.shift", "sin(shift) must be nonzero");
        if (pvqd.trotter_substeps < 1) throw ValidationError("pvqd.trotter_substeps", "must be >= 1");
        if (!(tdva.rcond > 0.0)) throw ValidationError("tdva.rcond", "must be > 0");
    }

    MeasurementMode mode_for(std::uint64_t seed) const {
        return shots == 0 ? MeasurementMode::statevector() : MeasurementMode::shots(shots, seed);
    }

    PvqdConfig pvqd_config(std::uint64_t seed) const {
        PvqdConfig c;
        c.dt = dt;
        c.n_steps = n_steps;
        c.threshold = pvqd.threshold;
        c.max_iters = pvqd.max_iters;
        c.optimizer = pvqd.optimizer;
        c.warm_start = pvqd.warm_start;
        c.random_guess_scale = pvqd.random_guess_scale;
        c.guess_seed = seed;
        c.loss_kind = pvqd.loss;
        c.mode = mode_for(seed);
        if (pvqd.exact_readout) c.readout_mode = MeasurementMode::statevector();
        c.shift = pvqd.shift;
        c.trotter_substeps = pvqd.trotter_substeps;
        c.keep_loss_history = pvqd.keep_loss_history;
        return c;
    }

    tdva::TdvaConfig tdva_config(std::uint64_t seed) const {
        tdva::TdvaConfig c;
        c.dt = dt;
        c.n_steps = n_steps;
        c.rcond = tdva.rcond;
        c.mode = mode_for(seed);
        return c;
    }
};

struct SeedRun {
    std::uint64_t seed = 0;
    std::vector<TrajectoryRecord> records;
    double delta_f = 0.0;
    std::uint64_t total_samples = 0;
    std::uint64_t total_circuits = 0;
};

struct RunSummary {
    double delta_f_mean = 0.0;
    double delta_f_std = 0.0;
    double total_samples_mean = 0.0;
    double total_samples_std = 0.0;
    double total_circuits_mean = 0.0;
    double total_circuits_std = 0.0;
    double wall_seconds = 0.0;
};

struct RunArtifact {
    int format_version = kArtifactFormatVersion;
    ExperimentConfig config;
    std::vector<SeedRun> runs;
    RunSummary summary;
};

/// Exact trajectory sampled on the same grid as the variational runs.
inline std::vector<TrajectoryRecord> run_exact(const ExperimentConfig& config) {
    const StateVector initial = prepare_state(build_ansatz(config.ansatz()), config.initial_parameters());
    const ExactPropagator exact(config.model.hamiltonian(), config.model.num_spins);
    std::vector<TrajectoryRecord> records;
    records.reserve(config.n_steps);
    for (std::size_t k = 0; k < config.n_steps; ++k) {
        const double t = static_cast<double>(k + 1) * config.dt;
        const StateVector psi = exact.propagate(initial, t);
        TrajectoryRecord r;
        r.time = t;
        r.magnetization_x = magnetization(psi, 'x');
        r.magnetization_z = magnetization(psi, 'z');
        records.push_back(std::move(r));
    }
    return records;
}

// ---------------------------------------------------------------------------------------------------------------
// JSON

using Json = nlohmann::ordered_json;

inline Json circuit_to_json(const Circuit& circuit) {
    Json gates = Json::array();
    for (const Gate& g : circuit.gates()) {
        Json qubits = Json::array();
        for (std::size_t q = 0; q < circuit.num_qubits(); ++q)
            if (g.generator.op(q) != 'I') qubits.push_back(q);
        Json j{{"kind", g.kind == GateKind::fixed_pauli ? "pauli" : "rotation"},
               {"qubits", qubits},
               {"generator", g.generator.label(circuit.num_qubits())}};
        if (g.param_index) {
            j["param_index"] = *g.param_index;
            j["angle_scale"] = g.angle_scale;
        } else if (g.kind == GateKind::pauli_rotation) {
            j["angle"] = g.angle;
        }
        gates.push_back(std::move(j));
    }
    return Json{{"num_qubits", circuit.num_qubits()}, {"num_params", circuit.num_params()}, {"gates", gates}};
}

namespace detail {

template <class T>
T get_or(const Json& j, const char* key, T fallback) {
    return j.contains(key) ? j.at(key).get<T>() : fallback;
}

/// Reads a non-negative integer, reporting negative or non-integral values against `field`.
inline std::size_t get_count(const Json& j, const char* key, std::size_t fallback, const std::string& field) {
    if (!j.contains(key)) return fallback;
    const Json& v = j.at(key);
    if (!v.is_number_integer()) throw ValidationError(field, "must be an integer");
    const auto x = v.get<std::int64_t>();
    if (x < 0) throw ValidationError(field, "must be >= 0, got " + std::to_string(x));
    return static_cast<std::size_t>(x);
}

inline double get_real(const Json& j, const char* key, double fallback, const std::string& field) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number()) throw ValidationError(field, "must be a number");
    return j.at(key).get<double>();
}

inline Json record_to_json(const TrajectoryRecord& r) {
    Json j{{"time", r.time},
           {"params", r.params},
           {"infidelity_exact", r.infidelity_exact},
           {"magnetization_x", r.magnetization_x},
           {"magnetization_z", r.magnetization_z},
           {"iterations", r.iterations},
           {"samples_cumulative", r.samples_cumulative},
           {"circuits_cumulative", r.circuits_cumulative},
           {"loss_final", r.loss_final},
           {"budget_exhausted", r.budget_exhausted}};
    if (!r.loss_history.empty()) j["loss_history"] = r.loss_history;
    return j;
}

inline TrajectoryRecord record_from_json(const Json& j) {
    try {
        TrajectoryRecord r;
        r.time = j.at("time").get<double>();
        r.params = j.at("params").get<std::vector<double>>();
        r.infidelity_exact = j.at("infidelity_exact").get<double>();
        r.magnetization_x = j.at("magnetization_x").get<double>();
        r.magnetization_z = j.at("magnetization_z").get<double>();
        r.iterations = j.at("iterations").get<std::size_t>();
        r.samples_cumulative = j.at("samples_cumulative").get<std::uint64_t>();
        r.circuits_cumulative = j.at("circuits_cumulative").get<std::uint64_t>();
        r.loss_final = j.at("loss_final").get<double>();
        r.budget_exhausted = j.at("budget_exhausted").get<bool>();
        if (j.contains("loss_history")) r.loss_history = j.at("loss_history").get<std::vector<double>>();
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("trajectory record: ") + e.what());
    }
}

} // namespace detail

inline Json config_to_json(const ExperimentConfig& c) {
    return Json{
        {"name", c.name},
        {"figure", c.figure},
        {"model", {{"type", "tfim"}, {"J", c.model.coupling}, {"h", c.model.field}, {"N", c.model.num_spins}}},
        {"ansatz", {{"depth", c.depth}, {"axis", to_string(c.axis)}}},
        {"algorithm", to_string(c.algorithm)},
        {"dt", c.dt},
        {"n_steps", c.n_steps},
        {"shots", c.shots},
        {"pvqd",
         {{"threshold", c.pvqd.threshold},
          {"max_iters", c.pvqd.max_iters},
          {"optimizer",
           {{"kind", to_string(c.pvqd.optimizer.kind)},
            {"learning_rate", c.pvqd.optimizer.learning_rate},
            {"beta1", c.pvqd.optimizer.beta1},
            {"beta2", c.pvqd.optimizer.beta2},
            {"epsilon", c.pvqd.optimizer.epsilon}}},
          {"warm_start", c.pvqd.warm_start},
          {"random_guess_scale", c.pvqd.random_guess_scale},
          {"loss", to_string(c.pvqd.loss)},
          {"exact_readout", c.pvqd.exact_readout},
          {"shift", c.pvqd.shift},
          {"trotter_substeps", c.pvqd.trotter_substeps},
          {"keep_loss_history", c.pvqd.keep_loss_history}}},
        {"tdva", {{"rcond", c.tdva.rcond}}},
        {"seeds", c.seeds},
        {"initial_params", c.initial_params},
        {"output_path", c.output_path}};
}

/// Missing keys keep their defaults; present keys are type- and range-checked, then the whole
/// configuration is validated.
inline ExperimentConfig config_from_json(const Json& j, ExperimentConfig c = {}) {
    using detail::get_count;
    using detail::get_real;
    if (!j.is_object()) throw ValidationError("<root>", "configuration must be an object");
    try {
        c.name = detail::get_or<std::string>(j, "name", c.name);
        c.figure = detail::get_or<std::string>(j, "figure", c.figure);
        if (j.contains("model")) {
            const Json& m = j.at("model");
            const auto type = detail::get_or<std::string>(m, "type", "tfim");
            if (type != "tfim") throw ValidationError("model.type", "only tfim is supported, got '" + type + "'");
            c.model.coupling = get_real(m, "J", c.model.coupling, "model.J");
            c.model.field = get_real(m, "h", c.model.field, "model.h");
            c.model.num_spins = get_count(m, "N", c.model.num_spins, "model.N");
        }
        if (j.contains("ansatz")) {
            const Json& a = j.at("ansatz");
            c.depth = get_count(a, "depth", c.depth, "ansatz.depth");
            if (a.contains("axis")) c.axis = parse_axis(a.at("axis").get<std::string>());
        }
        if (j.contains("algorithm")) c.algorithm = parse_algorithm(j.at("algorithm").get<std::string>());
        c.dt = get_real(j, "dt", c.dt, "dt");
        c.n_steps = get_count(j, "n_steps", c.n_steps, "n_steps");
        c.shots = get_count(j, "shots", c.shots, "shots");
        if (j.contains("pvqd")) {
            const Json& p = j.at("pvqd");
            c.pvqd.threshold = get_real(p, "threshold", c.pvqd.threshold, "pvqd.threshold");
            c.pvqd.max_iters = get_count(p, "max_iters", c.pvqd.max_iters, "pvqd.max_iters");
            if (p.contains("optimizer")) {
                const Json& o = p.at("optimizer");
                if (o.contains("kind")) c.pvqd.optimizer.kind = parse_optimizer(o.at("kind").get<std::string>());
                auto& s = c.pvqd.optimizer;
                s.learning_rate = get_real(o, "learning_rate", s.learning_rate, "pvqd.optimizer.learning_rate");
                s.beta1 = get_real(o, "beta1", s.beta1, "pvqd.optimizer.beta1");
                s.beta2 = get_real(o, "beta2", s.beta2, "pvqd.optimizer.beta2");
                s.epsilon = get_real(o, "epsilon", s.epsilon, "pvqd.optimizer.epsilon");
            }
            c.pvqd.warm_start = detail::get_or<bool>(p, "warm_start", c.pvqd.warm_start);
            c.pvqd.random_guess_scale =
                get_real(p, "random_guess_scale", c.pvqd.random_guess_scale, "pvqd.random_guess_scale");
            if (p.contains("loss")) c.pvqd.loss = parse_loss(p.at("loss").get<std::string>());
            c.pvqd.exact_readout = detail::get_or<bool>(p, "exact_readout", c.pvqd.exact_readout);
            c.pvqd.shift = get_real(p, "shift", c.pvqd.shift, "pvqd.shift");
            c.pvqd.trotter_substeps = get_count(p, "trotter_substeps", c.pvqd.trotter_substeps, "pvqd.trotter_substeps");
            c.pvqd.keep_loss_history = detail::get_or<bool>(p, "keep_loss_history", c.pvqd.keep_loss_history);
        }
        if (j.contains("tdva")) c.tdva.rcond = get_real(j.at("tdva"), "rcond", c.tdva.rcond, "tdva.rcond");
        if (j.contains("seeds")) {
            c.seeds.clear();
            for (const Json& s : j.at("seeds")) {
                if (!s.is_number_integer() || s.get<std::int64_t>() < 0)
                    throw ValidationError("seeds", "seeds must be non-negative integers");
                c.seeds.push_back(s.get<std::uint64_t>());
            }
        }
        c.initial_params = detail::get_or<std::vector<double>>(j, "initial_params", c.initial_params);
        c.output_path = detail::get_or<std::string>(j, "output_path", c.output_path);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("<root>", std::string("malformed configuration: ") + e.what());
    }
    c.validate();
    return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("<file>", "cannot open " + path.string());
    Json j;
    try {
        j = Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError("<file>", path.string() + ": " + e.what());
    }
    return config_from_json(j);
}

inline Json summary_to_json(const RunSummary& s) {
    return Json{{"delta_F_mean", s.delta_f_mean},
                {"delta_F_std", s.delta_f_std},
                {"total_samples_mean", s.total_samples_mean},
                {"total_samples_std", s.total_samples_std},
                {"total_circuits_mean", s.total_circuits_mean},
                {"total_circuits_std", s.total_circuits_std},
                {"wall_seconds", s.wall_seconds}};
}

inline std::filesystem::path records_path(const std::filesystem::path& dir, const std::string& name) {
    return dir / (name + ".records.ndjson");
}
inline std::filesystem::path summary_path(const std::filesystem::path& dir, const std::string& name) {
    return dir / (name + ".summary.json");
}

/// Writes `<name>.records.ndjson` (one record per line, tagged with seed and step) and
/// `<name>.summary.json` (format version, config snapshot, per-seed totals, aggregate summary).
inline void save_artifact(const RunArtifact& a, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    const std::string& name = a.config.name;
    {
        std::ofstream out(records_path(dir, name));
        if (!out) throw std::runtime_error("cannot write " + records_path(dir, name).string());
        for (const SeedRun& run : a.runs)
            for (std::size_t k = 0; k < run.records.size(); ++k) {
                Json line{{"seed", run.seed}, {"step", k}};
                line.update(detail::record_to_json(run.records[k]));
                out << line.dump() << '\n';
            }
    }
    Json runs = Json::array();
    for (const SeedRun& run : a.runs)
        runs.push_back({{"seed", run.seed},
                        {"steps", run.records.size()},
                        {"delta_F", run.delta_f},
                        {"total_samples", run.total_samples},
                        {"total_circuits", run.total_circuits}});
    const Json doc{{"format_version", a.format_version},
                   {"config", config_to_json(a.config)},
                   {"runs", runs},
                   {"summary", summary_to_json(a.summary)}};
    std::ofstream out(summary_path(dir, name));
    if (!out) throw std::runtime_error("cannot write " + summary_path(dir, name).string());
    out << doc.dump(2) << '\n';
}

inline RunArtifact load_artifact(const std::filesystem::path& summary_file) {
    std::ifstream in(summary_file);
    if (!in) throw SchemaError("cannot open " + summary_file.string());
    RunArtifact a;
    try {
        const Json doc = Json::parse(in);
        a.format_version = doc.at("format_version").get<int>();
        if (a.format_version != kArtifactFormatVersion)
            throw SchemaError("unsupported artifact format version " + std::to_string(a.format_version));
        a.config = config_from_json(doc.at("config"));
        for (const Json& r : doc.at("runs")) {
            SeedRun run;
            run.seed = r.at("seed").get<std::uint64_t>();
            run.delta_f = r.at("delta_F").get<double>();
            run.total_samples = r.at("total_samples").get<std::uint64_t>();
            run.total_circuits = r.at("total_circuits").get<std::uint64_t>();
            a.runs.push_back(std::move(run));
        }
        const Json& s = doc.at("summary");
        a.summary.delta_f_mean = s.at("delta_F_mean").get<double>();
        a.summary.delta_f_std = s.at("delta_F_std").get<double>();
        a.summary.total_samples_mean = s.at("total_samples_mean").get<double>();
        a.summary.total_samples_std = s.at("total_samples_std").get<double>();
        a.summary.total_circuits_mean = s.at("total_circuits_mean").get<double>();
        a.summary.total_circuits_std = s.at("total_circuits_std").get<double>();
        a.summary.wall_seconds = s.at("wall_seconds").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(summary_file.string() + ": " + e.what());
    }

    const auto records_file = summary_file.parent_path() / (a.config.name + ".records.ndjson");
    std::ifstream rin(records_file);
    if (!rin) throw SchemaError("missing records file " + records_file.string());
    std::string line;
    while (std::getline(rin, line)) {
        if (line.empty()) continue;
        Json j;
        try {
            j = Json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw SchemaError(records_file.string() + ": " + e.what());
        }
        const auto seed = j.value("seed", std::uint64_t{0});
        auto it = std::find_if(a.runs.begin(), a.runs.end(), [&](const SeedRun& r) { return r.seed == seed; });
        if (it == a.runs.end()) throw SchemaError("record for unknown seed " + std::to_string(seed));
        it->records.push_back(detail::record_from_json(j));
    }
    return a;
}

/// Loads every artifact in `dir`, optionally only those tagged with `figure`, ordered by name.
inline std::vector<RunArtifact> load_artifacts(const std::filesystem::path& dir, const std::string& figure = "") {
    if (!std::filesystem::is_directory(dir)) throw SchemaError("not a directory: " + dir.string());
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        const std::string fname = entry.path().filename().string();
        if (fname.size() > 13 && fname.ends_with(".summary.json")) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<RunArtifact> out;
    for (const auto& f : files) {
        RunArtifact a = load_artifact(f);
        if (figure.empty() || a.config.figure == figure) out.push_back(std::move(a));
    }
    return out;
}

/// Runs the configured algorithm once per seed and aggregates across seeds. Writes the artifact when
/// `config.output_path` is set.
inline RunArtifact run_experiment(const ExperimentConfig& config) {
    config.validate();
    const auto start = std::chrono::steady_clock::now();
    RunArtifact artifact;
    artifact.config = config;

    const std::vector<double> w0 = config.initial_parameters();
    std::vector<double> delta_f, samples, circuits;
    for (std::uint64_t seed : config.seeds) {
        SeedRun run;
        run.seed = seed;
        SampleCounter counter;
        switch (config.algorithm) {
        case Algorithm::pvqd:
            run.records = run_pvqd(config.model, config.ansatz(), w0, config.pvqd_config(seed), &counter);
            break;
        case Algorithm::tdva:
            run.records = tdva::run(config.model, config.ansatz(), w0, config.tdva_config(seed), &counter);
            break;
        case Algorithm::exact: run.records = run_exact(config); break;
        }
        run.delta_f = integrated_infidelity(run.records);
        run.total_samples = counter.total_samples();
        run.total_circuits = counter.circuit_evaluations();
        delta_f.push_back(run.delta_f);
        samples.push_back(static_cast<double>(run.total_samples));
        circuits.push_back(static_cast<double>(run.total_circuits));
        artifact.runs.push_back(std::move(run));
    }

    std::tie(artifact.summary.delta_f_mean, artifact.summary.delta_f_std) = mean_std(delta_f);
    std::tie(artifact.summary.total_samples_mean, artifact.summary.total_samples_std) = mean_std(samples);
    std::tie(artifact.summary.total_circuits_mean, artifact.summary.total_circuits_std) = mean_std(circuits);
    artifact.summary.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    if (!config.output_path.empty()) save_artifact(artifact, config.output_path);
    return artifact;
}

// ---------------------------------------------------------------------------------------------------------------
// Figure presets

inline const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names{"fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8"};
    return names;
}

namespace detail {

inline std::vector<std::uint64_t> seed_range(std::uint64_t first, std::size_t count) {
    std::vector<std::uint64_t> s(count);
    for (std::size_t i = 0; i < count; ++i) s[i] = first + i;
    return s;
}

/// Three spins, J = 1/4, h = 1, depth-3 alternating ansatz, dt = 0.05 for 60 steps.
inline ExperimentConfig preset_base(const std::string& figure, const std::string& name) {
    ExperimentConfig c;
    c.figure = figure;
    c.name = name;
    return c;
}

} // namespace detail

/// Grid points of a figure preset. Every point is an independent experiment.
inline std::vector<ExperimentConfig> preset(std::string_view figure) {
    using detail::preset_base;
    using detail::seed_range;
    std::vector<ExperimentConfig> grid;
    const std::string fig(figure);

    if (fig == "fig2" || fig == "fig3") {
        // Shot-noise comparison. p-VQD makes one sampled-gradient update per time step (M = 1), which puts
        // its budget at 2 p n_s n_t samples; the stopping test reads the exact loss.
        const std::size_t n_seeds = fig == "fig2" ? 10 : 1;
        if (fig == "fig3") {
            ExperimentConfig e = preset_base(fig, fig + "_exact");
            e.algorithm = Algorithm::exact;
            grid.push_back(e);
        }
        for (std::uint64_t shots : {800u, 8000u, 80000u}) {
            ExperimentConfig p = preset_base(fig, fig + "_pvqd_" + std::to_string(shots));
            p.shots = shots;
            p.seeds = seed_range(1, n_seeds);
            p.pvqd.max_iters = 1;
            p.pvqd.exact_readout = true;
            grid.push_back(p);
            ExperimentConfig t = preset_base(fig, fig + "_tdva_" + std::to_string(shots));
            t.algorithm = Algorithm::tdva;
            t.shots = shots;
            t.seeds = seed_range(1, n_seeds);
            grid.push_back(t);
        }
        return grid;
    }
    if (fig == "fig4") {
        // Every step optimizes until the loss is below the threshold; late steps need up to a few thousand
        // SGD updates at this rate.
        ExperimentConfig p = preset_base(fig, "fig4_pvqd");
        p.pvqd.max_iters = 5000;
        grid.push_back(p);
        return grid;
    }
    if (fig == "fig5") {
        // Depth scan at 8000 shots. The stopping test is sampled too; each step starts from dw = 0 and the
        // SGD rate is scaled by 1/p to keep the update stable as the ansatz grows.
        for (std::size_t d = 2; d <= 8; ++d) {
            for (double nu : {0.3, 0.2, 0.1}) {
                std::ostringstream name;
                name << "fig5_pvqd_d" << d << "_nu" << nu;
                ExperimentConfig p = preset_base(fig, name.str());
                p.depth = d;
                p.axis = AxisScheme::all_x;
                p.shots = 8000;
                p.seeds = seed_range(1, 5);
                p.pvqd.threshold = nu;
                p.pvqd.max_iters = 200;
                p.pvqd.warm_start = false;
                p.pvqd.optimizer.learning_rate = 9e-3 / static_cast<double>(p.num_params());
                grid.push_back(p);
            }
            ExperimentConfig t = preset_base(fig, "fig5_tdva_d" + std::to_string(d));
            t.algorithm = Algorithm::tdva;
            t.depth = d;
            t.axis = AxisScheme::all_x;
            t.shots = 8000;
            t.seeds = {1};
            grid.push_back(t);
        }
        return grid;
    }
    if (fig == "fig6") {
        // First two time steps from dw = 0, both loss kinds, growing chains.
        for (std::size_t n : {3u, 5u, 7u, 9u, 11u}) {
            for (LossKind loss : {LossKind::global, LossKind::local}) {
                ExperimentConfig p = preset_base(fig, "fig6_n" + std::to_string(n) + "_" + to_string(loss));
                p.model.num_spins = n;
                p.axis = AxisScheme::all_x;
                p.n_steps = 2;
                p.pvqd.loss = loss;
                p.pvqd.warm_start = false;
                grid.push_back(p);
            }
        }
        return grid;
    }
    if (fig == "fig7") {
        // Accuracy per step 1 - F < 1e-5, i.e. threshold 1e-5 / dt^2 on the normalized loss.
        for (bool warm : {true, false}) {
            ExperimentConfig p = preset_base(fig, std::string("fig7_") + (warm ? "warm" : "random"));
            p.axis = AxisScheme::all_x;
            p.pvqd.threshold = 1e-5 / (p.dt * p.dt);
            p.pvqd.optimizer.learning_rate = 8e-4;
            p.pvqd.warm_start = warm;
            p.pvqd.random_guess_scale = warm ? 0.0 : p.dt;
            p.pvqd.keep_loss_history = true;
            p.seeds = {1};
            grid.push_back(p);
        }
        return grid;
    }
    if (fig == "fig8") {
        // One time step, M = 150 sampled-gradient updates, exact loss readout.
        for (OptimizerKind kind : {OptimizerKind::sgd, OptimizerKind::adam}) {
            for (std::uint64_t shots : {100u, 1000u, 10000u, 100000u}) {
                ExperimentConfig p = preset_base(fig, "fig8_" + to_string(kind) + "_" + std::to_string(shots));
                p.n_steps = 1;
                p.shots = shots;
                p.seeds = seed_range(1, 10);
                p.pvqd.threshold = 1e-12;
                p.pvqd.max_iters = 150;
                p.pvqd.exact_readout = true;
                p.pvqd.optimizer = {kind, kind == OptimizerKind::sgd ? 6e-4 : 1e-2};
                grid.push_back(p);
            }
        }
        return grid;
    }
    throw ValidationError("preset", "unknown figure '" + fig + "'");
}

// ---------------------------------------------------------------------------------------------------------------
// Plot tables

namespace detail {

inline void require(bool ok, const std::string& figure, const std::string& what) {
    if (!ok) throw SchemaError(figure + ": " + what);
}

inline void require_runs(const RunArtifact& a, const std::string& figure) {
    require(!a.runs.empty(), figure, "artifact '" + a.config.name + "' has no runs");
    for (const SeedRun& r : a.runs)
        require(r.records.size() == a.config.n_steps, figure,
                "artifact '" + a.config.name + "' is missing trajectory records");
}

/// Step infidelity 1 - F against the one-step target, from the final normalized loss.
inline double step_infidelity(const TrajectoryRecord& r, double dt) { return r.loss_final * dt * dt; }

} // namespace detail

/// Writes the comma-separated table of `figure` built from `artifacts`, header row first.
inline void emit_plot_data(std::span<const RunArtifact> artifacts, std::string_view figure, std::ostream& out) {
    using detail::require;
    using detail::require_runs;
    const std::string fig(figure);
    require(!artifacts.empty(), fig, "no artifacts");
    out.precision(10);

    if (fig == "fig2") {
        out << "total_samples,delta_F_mean,delta_F_std,shots,algorithm\n";
        for (const RunArtifact& a : artifacts) {
            require(a.config.algorithm != Algorithm::exact, fig, "exact runs carry no sample budget");
            require(!a.runs.empty(), fig, "artifact '" + a.config.name + "' has no runs");
            out << a.summary.total_samples_mean << ',' << a.summary.delta_f_mean << ',' << a.summary.delta_f_std << ','
                << a.config.shots << ',' << to_string(a.config.algorithm) << '\n';
        }
        return;
    }
    if (fig == "fig3") {
        out << "time,mag_x,mag_z,shots,algorithm\n";
        for (const RunArtifact& a : artifacts) {
            require_runs(a, fig);
            for (const TrajectoryRecord& r : a.runs.front().records)
                out << r.time << ',' << r.magnetization_x << ',' << r.magnetization_z << ',' << a.config.shots << ','
                    << to_string(a.config.algorithm) << '\n';
        }
        return;
    }
    if (fig == "fig4") {
        out << "time,iterations,loss\n";
        for (const RunArtifact& a : artifacts) {
            require(a.config.algorithm == Algorithm::pvqd, fig, "needs p-VQD runs");
            require_runs(a, fig);
            for (const TrajectoryRecord& r : a.runs.front().records)
                out << r.time << ',' << r.iterations << ',' << r.loss_final << '\n';
        }
        return;
    }
    if (fig == "fig5") {
        out << "num_params,total_samples_mean,total_samples_std,threshold,algorithm,total_circuits_mean,total_circuits_std\n";
        for (const RunArtifact& a : artifacts) {
            require(a.config.algorithm != Algorithm::exact, fig, "exact runs carry no sample budget");
            require(a.config.shots > 0, fig, "needs shots-mode runs");
            require(!a.runs.empty(), fig, "artifact '" + a.config.name + "' has no runs");
            out << a.config.num_params() << ',' << a.summary.total_samples_mean << ',' << a.summary.total_samples_std
                << ',';
            if (a.config.algorithm == Algorithm::pvqd) out << a.config.pvqd.threshold;
            out << ',' << to_string(a.config.algorithm) << ',' << a.summary.total_circuits_mean << ','
                << a.summary.total_circuits_std << '\n';
        }
        return;
    }
    if (fig == "fig6") {
        out << "num_qubits,num_params,loss,time_step,iterations\n";
        for (const RunArtifact& a : artifacts) {
            require(a.config.algorithm == Algorithm::pvqd, fig, "needs p-VQD runs");
            require_runs(a, fig);
            const auto& recs = a.runs.front().records;
            for (std::size_t k = 0; k < recs.size(); ++k)
                out << a.config.model.num_spins << ',' << a.config.num_params() << ',' << to_string(a.config.pvqd.loss)
                    << ',' << k << ',' << recs[k].iterations << '\n';
        }
        return;
    }
    if (fig == "fig7") {
        out << "init,time_step,iteration,loss\n";
        for (const RunArtifact& a : artifacts) {
            require(a.config.algorithm == Algorithm::pvqd, fig, "needs p-VQD runs");
            require_runs(a, fig);
            const std::string init = a.config.pvqd.warm_start ? "warm" : "random";
            const auto& recs = a.runs.front().records;
            for (std::size_t k = 0; k < recs.size(); ++k) {
                require(!recs[k].loss_history.empty(), fig, "artifact '" + a.config.name + "' has no loss histories");
                for (std::size_t i = 0; i < recs[k].loss_history.size(); ++i)
                    out << init << ',' << k << ',' << i << ',' << recs[k].loss_history[i] << '\n';
            }
        }
        return;
    }
    if (fig == "fig8") {
        // Points per optimizer, then a power-law fit of each optimizer's series.
        struct Row {
            std::uint64_t shots;
            double mean, sd;
        };
        std::vector<std::pair<std::string, std::vector<Row>>> series;
        for (const RunArtifact& a : artifacts) {
            require(a.config.algorithm == Algorithm::pvqd, fig, "needs p-VQD runs");
            require(a.config.shots > 0, fig, "needs shots-mode runs");
            require(a.config.n_steps == 1, fig, "needs single-step runs");
            require_runs(a, fig);
            std::vector<double> inf;
            for (const SeedRun& r : a.runs) inf.push_back(detail::step_infidelity(r.records.front(), a.config.dt));
            const auto [m, s] = mean_std(inf);
            const std::string opt = to_string(a.config.pvqd.optimizer.kind);
            auto it = std::find_if(series.begin(), series.end(), [&](const auto& e) { return e.first == opt; });
            if (it == series.end()) it = series.insert(series.end(), {opt, {}});
            it->second.push_back({a.config.shots, m, s});
        }
        out << "n_shots,infidelity_mean,infidelity_std,optimizer,k,gamma\n";
        for (const auto& [opt, rows] : series) {
            std::vector<std::pair<double, double>> pts;
            for (const Row& r : rows) pts.emplace_back(static_cast<double>(r.shots), r.mean);
            double k = std::nan(""), gamma = std::nan("");
            if (pts.size() >= 3) {
                const PowerLawFit fit = power_law_fit(pts);
                k = fit.k;
                gamma = fit.gamma;
            }
            for (const Row& r : rows)
                out << r.shots << ',' << r.mean << ',' << r.sd << ',' << opt << ',' << k << ',' << gamma << '\n';
        }
        return;
    }
    throw ValidationError("figure", "unknown figure '" + fig + "'");
}

} // namespace pvqd
