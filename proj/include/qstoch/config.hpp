#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qstoch/io.hpp"

namespace qstoch {

// One run = one task. Flags and config files both land here; config_from_json
// rejects unknown keys so typos fail loudly before any computation.
struct RunConfig {
    std::string task; // convert, check, hp, add, flow, simulate, wz
    std::vector<std::string> inputs;
    std::string out_dir = ".";
    std::optional<GaugeParameter> kappa; // unset = symmetric where one is needed
    double tol = tol_algebra;
    std::uint64_t seed = 1;

    // simulate
    std::string experiment = "ed-vs-sd";
    std::vector<double> dt_list;
    double t_final = 1.0;
    cx f_sample{1.0, 0.0};
    cx g_sample{1.0, 0.0};
    int oracle_steps = 4096;

    // wz
    Mat coupling; // V, self-adjoint
    Mat drift;    // H, self-adjoint
    std::vector<double> lambda_list;
    int n_seeds = 8;
    double dt_path = 0.0; // 0 = fitted to min(lambda)^2/10 and the horizon
    double dt_ode = 0.0;  // 0 = fitted to min(lambda)/10 and the horizon
};

// Strict schema: collects every violation and throws one SchemaError listing
// them all, each naming its key path.
RunConfig config_from_json(const Json& j);
RunConfig load_config(const std::string& path);

// Executes the task, prints one line per check, writes report.json and any
// task artifacts into out_dir (all writes happen after the computation).
// Returns 0 when every asserted check passes, 2 otherwise. Input problems
// are thrown (ParseError, SchemaError, ...) for the caller to map to exit 1.
int run(const RunConfig& config);

} // namespace qstoch
