// Command-line front end: single runs, figure presets and plot-table emission.
//
// Configuration precedence for `run`: built-in defaults < --config file < command-line flags.
// Output directory: --out, else the config's output_path, else $PVQD_OUTPUT_DIR, else ./pvqd_out.
//
// Exit codes: 0 success, 2 invalid configuration or input, 3 numerical failure.

#include "pvqd/harness.hpp"

#include "CLI11.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

namespace {

constexpr int kExitInvalid = 2;
constexpr int kExitNumerical = 3;

std::string default_output_dir() {
    if (const char* env = std::getenv("PVQD_OUTPUT_DIR"); env && *env) return env;
    return "pvqd_out";
}

struct RunFlags {
    std::string config_file, model = "tfim", ansatz, loss, algorithm, optimizer, out, name;
    std::size_t n = 0, steps = 0, depth = 0, max_iters = 0;
    double j = 0, h = 0, dt = 0, threshold = 0, lr = 0;
    std::uint64_t shots = 0;
    std::vector<std::uint64_t> seeds;
};

/// Flags the user actually passed, as a JSON patch over the file configuration.
pvqd::Json flag_patch(const CLI::App& app, const RunFlags& f) {
    auto given = [&](const char* name) { return app.count(name) > 0; };
    pvqd::Json p = pvqd::Json::object();
    if (given("--model")) p["model"]["type"] = f.model;
    if (given("--n")) p["model"]["N"] = f.n;
    if (given("--j")) p["model"]["J"] = f.j;
    if (given("--h")) p["model"]["h"] = f.h;
    if (given("--depth")) p["ansatz"]["depth"] = f.depth;
    if (given("--ansatz")) p["ansatz"]["axis"] = f.ansatz;
    if (given("--algorithm")) p["algorithm"] = f.algorithm;
    if (given("--dt")) p["dt"] = f.dt;
    if (given("--steps")) p["n_steps"] = f.steps;
    if (given("--shots")) p["shots"] = f.shots;
    if (given("--threshold")) p["pvqd"]["threshold"] = f.threshold;
    if (given("--max-iters")) p["pvqd"]["max_iters"] = f.max_iters;
    if (given("--loss")) p["pvqd"]["loss"] = f.loss;
    if (given("--optimizer")) p["pvqd"]["optimizer"]["kind"] = f.optimizer;
    if (given("--lr")) p["pvqd"]["optimizer"]["learning_rate"] = f.lr;
    if (given("--seed")) p["seeds"] = f.seeds;
    if (given("--name")) p["name"] = f.name;
    return p;
}

void print_summary(const pvqd::RunArtifact& a, std::ostream& out) {
    const pvqd::Json j{{"name", a.config.name},
                       {"algorithm", pvqd::to_string(a.config.algorithm)},
                       {"seeds", a.config.seeds.size()},
                       {"summary", pvqd::summary_to_json(a.summary)}};
    out << j.dump() << '\n';
}

int run_command(const CLI::App& app, const RunFlags& f) {
    pvqd::ExperimentConfig base;
    if (!f.config_file.empty()) base = pvqd::load_config(f.config_file);
    pvqd::ExperimentConfig config = pvqd::config_from_json(flag_patch(app, f), base);
    if (!f.out.empty())
        config.output_path = f.out;
    else if (config.output_path.empty())
        config.output_path = default_output_dir();
    const pvqd::RunArtifact a = pvqd::run_experiment(config);
    print_summary(a, std::cout);
    std::cerr << "wrote " << pvqd::summary_path(config.output_path, config.name).string() << '\n';
    return 0;
}

int preset_command(const std::string& figure, std::string out_dir, std::size_t seed_count) {
    if (out_dir.empty()) out_dir = default_output_dir();
    std::vector<pvqd::RunArtifact> artifacts;
    for (pvqd::ExperimentConfig c : pvqd::preset(figure)) {
        if (seed_count > 0) c.seeds = pvqd::detail::seed_range(1, seed_count);
        c.output_path = out_dir;
        artifacts.push_back(pvqd::run_experiment(c));
        print_summary(artifacts.back(), std::cout);
    }
    const auto table = std::filesystem::path(out_dir) / (figure + ".csv");
    std::ofstream csv(table);
    pvqd::emit_plot_data(artifacts, figure, csv);
    std::cerr << "wrote " << table.string() << '\n';
    return 0;
}

int emit_command(const std::string& figure, std::string in_dir, const std::string& out_file) {
    if (in_dir.empty()) in_dir = default_output_dir();
    // Artifacts tagged with the figure; untagged directories (plain `run` output) are used whole.
    auto artifacts = pvqd::load_artifacts(in_dir, figure);
    if (artifacts.empty()) artifacts = pvqd::load_artifacts(in_dir);
    if (out_file.empty()) {
        pvqd::emit_plot_data(artifacts, figure, std::cout);
        return 0;
    }
    std::ofstream out(out_file);
    if (!out) throw pvqd::ValidationError("--out", "cannot write " + out_file);
    pvqd::emit_plot_data(artifacts, figure, out);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Projected variational quantum dynamics: simulation runs, figure presets, plot tables"};
    app.require_subcommand(1);

    RunFlags f;
    CLI::App* run = app.add_subcommand("run", "Run one experiment (config file and/or flags)");
    run->set_help_flag("--help", "Print this help message and exit"); // -h would shadow --h
    run->add_option("--config", f.config_file, "JSON experiment configuration")->check(CLI::ExistingFile);
    run->add_option("--model", f.model, "Model family")->check(CLI::IsMember({"tfim"}));
    run->add_option("--n", f.n, "Number of spins");
    run->add_option("--j", f.j, "ZZ coupling J");
    run->add_option("--h", f.h, "Transverse field h");
    run->add_option("--dt", f.dt, "Time step");
    run->add_option("--steps", f.steps, "Number of time steps");
    run->add_option("--depth", f.depth, "Ansatz depth d");
    run->add_option("--ansatz", f.ansatz, "Rotation axes: x (all-x) or xy (alternating)")->check(CLI::IsMember({"x", "xy"}));
    run->add_option("--loss", f.loss, "Step-infidelity kind")->check(CLI::IsMember({"global", "local"}));
    run->add_option("--algorithm", f.algorithm, "Algorithm")->check(CLI::IsMember({"pvqd", "tdva", "exact"}));
    run->add_option("--shots", f.shots, "Shots per circuit; 0 for exact statevector readout");
    run->add_option("--threshold", f.threshold, "Stopping threshold on the normalized step infidelity");
    run->add_option("--lr", f.lr, "Learning rate");
    run->add_option("--max-iters", f.max_iters, "Iteration budget per time step");
    run->add_option("--optimizer", f.optimizer, "Optimizer")->check(CLI::IsMember({"sgd", "adam"}));
    run->add_option("--seed", f.seeds, "Seed (repeat for several independent runs)");
    run->add_option("--name", f.name, "Artifact name");
    run->add_option("--out", f.out, "Output directory");

    std::string figure, preset_out;
    std::size_t preset_seeds = 0;
    CLI::App* pre = app.add_subcommand("preset", "Run a figure preset and write its plot table");
    pre->add_option("figure", figure, "fig2 .. fig8")->required()->check(CLI::IsMember(pvqd::preset_names()));
    pre->add_option("--out", preset_out, "Output directory");
    pre->add_option("--seeds", preset_seeds, "Override the number of seeds per grid point");

    std::string emit_figure, emit_in, emit_out;
    CLI::App* emit = app.add_subcommand("emit", "Build a figure's plot table from stored artifacts");
    emit->add_option("figure", emit_figure, "fig2 .. fig8")->required()->check(CLI::IsMember(pvqd::preset_names()));
    emit->add_option("--in", emit_in, "Artifact directory");
    emit->add_option("--out", emit_out, "CSV file (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitInvalid;
    }

    try {
        if (*run) return run_command(*run, f);
        if (*pre) return preset_command(figure, preset_out, preset_seeds);
        if (*emit) return emit_command(emit_figure, emit_in, emit_out);
    } catch (const pvqd::ValidationError& e) {
        std::cerr << "invalid configuration: " << e.what() << '\n';
        return kExitInvalid;
    } catch (const pvqd::SchemaError& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        return kExitInvalid;
    } catch (const pvqd::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid argument: " << e.what() << '\n';
        return kExitInvalid;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
