#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qstoch/config.hpp"
#include "qstoch/errors.hpp"

namespace {

// flag values staged before merging over the config file
struct FlagSet {
    std::string config_path;
    std::vector<std::string> inputs;
    std::string out_dir;
    std::string kappa;
    std::string experiment;
    std::uint64_t seed = 0;
    double tol = 0.0;
    double t_final = 0.0;
    std::vector<double> dt_list;
    std::vector<double> lambda_list;
};

qstoch::cx parse_pair(const std::string& text, const std::string& what) {
    const auto comma = text.find(',');
    if (comma == std::string::npos)
        throw qstoch::SchemaError(what + " must be two comma-separated numbers, like 0.5,0.0");
    try {
        std::size_t used = 0;
        double re = std::stod(text.substr(0, comma), &used);
        if (used != comma) throw std::invalid_argument(what);
        std::string imag = text.substr(comma + 1);
        double im = std::stod(imag, &used);
        if (used != imag.size()) throw std::invalid_argument(what);
        return {re, im};
    } catch (const std::invalid_argument&) {
        throw qstoch::SchemaError(what + " must be two comma-separated numbers, like 0.5,0.0");
    }
}

void add_common_flags(CLI::App* cmd, FlagSet& flags) {
    cmd->add_option("inputs", flags.inputs, "coefficient files");
    cmd->add_option("--config", flags.config_path, "JSON config supplying anything not flagged");
    cmd->add_option("--out", flags.out_dir, "output directory (default .)");
    cmd->add_option("--kappa", flags.kappa, "gauge as re,im; the real part must be 0.5");
    cmd->add_option("--tol", flags.tol, "residual tolerance for the asserted checks");
    cmd->add_option("--seed", flags.seed, "seed for sampled checks and noise paths");
    cmd->add_option("--t-final", flags.t_final, "time horizon for sweeps");
    cmd->add_option("--dt-list", flags.dt_list, "slot widths, coarse to fine")->delimiter(',');
    cmd->add_option("--lambda-list", flags.lambda_list, "kernel widths, wide to narrow")
        ->delimiter(',');
    cmd->add_option("--experiment", flags.experiment, "simulate experiment name (ed-vs-sd)");
}

qstoch::RunConfig merge(const CLI::App& app, const std::string& task, const FlagSet& flags) {
    qstoch::RunConfig config;
    if (!flags.config_path.empty()) config = qstoch::load_config(flags.config_path);
    if (!config.task.empty() && config.task != task)
        throw qstoch::SchemaError("config says task '" + config.task +
                                  "' but the command line says '" + task + "'");
    config.task = task;
    const CLI::App* cmd = app.get_subcommand(task);
    if (cmd->count("inputs")) config.inputs = flags.inputs;
    if (cmd->count("--out")) config.out_dir = flags.out_dir;
    if (cmd->count("--kappa")) {
        qstoch::cx kappa = parse_pair(flags.kappa, "--kappa");
        if (kappa.real() != 0.5)
            throw qstoch::SchemaError("--kappa must have real part exactly 1/2; only the "
                                      "imaginary part is a free gauge choice");
        config.kappa = qstoch::GaugeParameter(kappa);
    }
    if (cmd->count("--tol")) {
        if (!(flags.tol > 0.0)) throw qstoch::SchemaError("--tol must be positive");
        config.tol = flags.tol;
    }
    if (cmd->count("--seed")) config.seed = flags.seed;
    if (cmd->count("--t-final")) {
        if (!(flags.t_final > 0.0)) throw qstoch::SchemaError("--t-final must be positive");
        config.t_final = flags.t_final;
    }
    if (cmd->count("--dt-list")) config.dt_list = flags.dt_list;
    if (cmd->count("--lambda-list")) config.lambda_list = flags.lambda_list;
    if (cmd->count("--experiment")) config.experiment = flags.experiment;
    return config;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"coefficient calculus and discretization experiments for "
                 "quantum stochastic generators"};
    app.require_subcommand(0, 1);

    std::map<std::string, FlagSet> flags;
    const std::vector<std::pair<std::string, std::string>> tasks{
        {"convert", "convert between Ito (G) and time-ordered exponent (E) tables"},
        {"check", "verify the defining invariant of a coefficient table"},
        {"hp", "extract the (W, K, H) parameterization from an Ito table"},
        {"add", "compose generators by adding exponent tables"},
        {"flow", "verify the adapted-flow structure equations for an Ito table"},
        {"simulate", "slot-discretization convergence experiment"},
        {"wz", "colored-noise convergence experiment"},
    };
    for (const auto& [name, help] : tasks) add_common_flags(app.add_subcommand(name, help), flags[name]);
    FlagSet top;
    app.add_option("--config", top.config_path, "JSON config carrying 'task' and options");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        qstoch::RunConfig config;
        if (app.get_subcommands().empty()) {
            if (top.config_path.empty())
                throw qstoch::SchemaError("pass a subcommand or --config with a 'task'");
            config = qstoch::load_config(top.config_path);
        } else {
            const std::string name = app.get_subcommands().front()->get_name();
            config = merge(app, name, flags[name]);
        }
        return qstoch::run(config);
    } catch (const qstoch::OdeNotConverged& e) {
        std::fprintf(stderr, "check failure: %s\n", e.what());
        return 2;
    } catch (const qstoch::NormTooLarge& e) {
        std::fprintf(stderr, "check failure: %s\n", e.what());
        return 2;
    } catch (const qstoch::NotSelfAdjoint& e) {
        std::fprintf(stderr, "check failure: %s\n", e.what());
        return 2;
    } catch (const qstoch::NotUnitary& e) {
        std::fprintf(stderr, "check failure: %s\n", e.what());
        return 2;
    } catch (const qstoch::UnitarityViolated& e) {
        std::fprintf(stderr, "check failure: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "input error: %s\n", e.what());
        return 1;
    }
}
