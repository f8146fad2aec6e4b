#include "qstoch/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <set>
#include <utility>

#include "qstoch/errors.hpp"
#include "qstoch/flow.hpp"

namespace qstoch {

namespace {

// collects every schema violation so one bad config reports all its problems
struct SchemaCheck {
    std::vector<std::string> problems;

    void fail(const std::string& msg) { problems.push_back(msg); }
    void finish() const {
        if (problems.empty()) return;
        std::string msg = "config rejected:";
        for (const auto& p : problems) msg += "\n  - " + p;
        throw SchemaError(msg);
    }
};

bool positive_number(const Json& j) { return j.is_number() && j.get<double>() > 0.0; }

const std::set<std::string>& known_tasks() {
    static const std::set<std::string> tasks{"convert", "check", "hp",      "add",
                                             "flow",    "wz",    "simulate"};
    return tasks;
}

std::string timestamp_utc() {
    std::time_t t = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof buf, "%FT%TZ", std::gmtime(&t));
    return buf;
}

struct CheckLine {
    std::string name;
    double residual = 0.0;
    double tolerance = 0.0;
    bool passed = false;
};

CheckLine residual_check(const std::string& name, double residual, double tol) {
    return {name, residual, tol, residual <= tol};
}

struct RunOutput {
    std::vector<CheckLine> checks;
    Json results = Json::object();
    std::vector<std::pair<std::string, std::string>> text_files;
    std::vector<std::pair<std::string, Json>> json_files;
};

double table_distance(const CoefficientBlock& x, const CoefficientBlock& y) {
    double m = 0.0;
    for (int a = 0; a <= x.channels(); ++a)
        for (int b = 0; b <= x.channels(); ++b)
            m = std::max(m, (x.block(a, b) - y.block(a, b)).norm());
    return m;
}

Json residual_map_json(const ConversionReport& r) {
    Json m = Json::object();
    for (const auto& [label, value] : r.residual_norms) m[label] = value;
    return m;
}

CoefficientFile read_single_input(const RunConfig& c) {
    if (c.inputs.size() != 1)
        throw SchemaError("task '" + c.task + "' takes exactly one input file");
    return read_coefficient_file(c.inputs[0]);
}

// Ito table of the input under its recorded gauge (pass-through for G files)
CoefficientBlock as_ito(const CoefficientFile& in) {
    return in.kind == TableKind::Ito ? in.table : strat_to_ito(in.table, *in.kappa);
}

// last halving ratio of a positive error sequence; the quantity the
// convergence flags threshold
double last_ratio(const std::vector<double>& errs) {
    if (errs.size() < 2 || !(errs[errs.size() - 2] > 0.0)) return 0.0;
    return errs.back() / errs[errs.size() - 2];
}

// largest step that both tiles [0, t_final] and stays at or below `bound`
double fitted_step(double t_final, double bound) {
    long n = std::lround(std::ceil(t_final / bound));
    if (n < 1) n = 1;
    while (t_final / static_cast<double>(n) > bound) ++n;
    return t_final / static_cast<double>(n);
}

void run_convert(const RunConfig& c, RunOutput& out) {
    CoefficientFile in = read_single_input(c);
    if (in.kind == TableKind::Strat) {
        GaugeParameter kappa = *in.kappa;
        if (c.kappa && c.kappa->value() != kappa.value())
            throw SchemaError("the input records its own gauge; --kappa may only restate it");
        CoefficientBlock g = strat_to_ito(in.table, kappa);
        double residual = table_distance(ito_to_strat(g, kappa), in.table);
        out.checks.push_back(residual_check("roundtrip_identity", residual, c.tol));
        out.results["direction"] = "exponent_to_ito";
        out.results["kappa"] = complex_to_json(kappa.value());
        out.json_files.emplace_back("converted.json",
                                    coefficients_to_json(g, TableKind::Ito, std::nullopt));
    } else {
        GaugeParameter kappa = c.kappa.value_or(GaugeParameter::symmetric());
        CoefficientBlock e = ito_to_strat(in.table, kappa);
        double residual = table_distance(strat_to_ito(e, kappa), in.table);
        out.checks.push_back(residual_check("roundtrip_identity", residual, c.tol));
        out.results["direction"] = "ito_to_exponent";
        out.results["kappa"] = complex_to_json(kappa.value());
        out.json_files.emplace_back("converted.json",
                                    coefficients_to_json(e, TableKind::Strat, kappa));
    }
}

void run_check(const RunConfig& c, RunOutput& out) {
    CoefficientFile in = read_single_input(c);
    ConversionReport r = in.kind == TableKind::Strat
                             ? check_strat_selfadjoint(in.table, c.tol)
                             : check_ito_unitarity(in.table, c.tol);
    const char* name =
        in.kind == TableKind::Strat ? "exponent_selfadjoint" : "generator_unitarity";
    out.checks.push_back({name, r.max_residual, r.tolerance, r.passed});
    out.results["invariant"] = r.check;
    out.results["residual_norms"] = residual_map_json(r);
    out.results["table"] = in.kind == TableKind::Strat ? "exponent" : "ito";
}

void run_hp(const RunConfig& c, RunOutput& out) {
    CoefficientFile in = read_single_input(c);
    CoefficientBlock g = as_ito(in);
    HPTriple hp = hp_from_ito(g, c.tol);
    const int nd = static_cast<int>(hp.w.rows());
    out.checks.push_back(residual_check(
        "channel_unitary", (hp.w.adjoint() * hp.w - Mat::Identity(nd, nd)).norm(), c.tol));
    out.checks.push_back(
        residual_check("hamiltonian_selfadjoint", (hp.h - hp.h.adjoint()).norm(), c.tol));
    out.checks.push_back(residual_check(
        "coupling_column", (g.channel_row(0) - hp.k.adjoint() * hp.w).norm(), c.tol));
    out.results["d"] = hp.dim();
    out.results["channels"] = hp.channels();
    Json doc;
    doc["d"] = hp.dim();
    doc["channels"] = hp.channels();
    doc["W"] = matrix_to_json(hp.w);
    doc["K"] = matrix_to_json(hp.k);
    doc["H"] = matrix_to_json(hp.h);
    out.json_files.emplace_back("hp.json", doc);
}

void run_add(const RunConfig& c, RunOutput& out) {
    if (c.inputs.size() < 2) throw SchemaError("add takes at least two input files");
    std::optional<GaugeParameter> gauge = c.kappa;
    std::vector<CoefficientFile> files;
    for (const auto& path : c.inputs) {
        files.push_back(read_coefficient_file(path));
        const CoefficientFile& f = files.back();
        if (f.kind == TableKind::Strat) {
            if (gauge && gauge->value() != f.kappa->value())
                throw SchemaError("'" + path + "' is recorded at a different gauge; " +
                                  "summands must share one kappa");
            if (!gauge) gauge = f.kappa;
        }
    }
    GaugeParameter kappa = gauge.value_or(GaugeParameter::symmetric());
    std::vector<CoefficientBlock> es;
    for (const CoefficientFile& f : files)
        es.push_back(f.kind == TableKind::Strat ? f.table : ito_to_strat(f.table, kappa));
    AdditionResult sum = add_generators(es, kappa);

    ConversionReport sa = check_strat_selfadjoint(sum.e_total, c.tol);
    ConversionReport un = check_ito_unitarity(sum.g_total, c.tol);
    out.checks.push_back({"sum_exponent_selfadjoint", sa.max_residual, sa.tolerance, sa.passed});
    out.checks.push_back({"sum_generator_unitarity", un.max_residual, un.tolerance, un.passed});
    out.results["parts"] = static_cast<int>(c.inputs.size());
    out.results["kappa"] = complex_to_json(kappa.value());
    out.json_files.emplace_back("sum.json",
                                coefficients_to_json(sum.g_total, TableKind::Ito, std::nullopt));
}

void run_flow(const RunConfig& c, RunOutput& out) {
    CoefficientFile in = read_single_input(c);
    CoefficientBlock g = as_ito(in);
    FlowSummary s = verify_flow(g, 4, c.seed);
    out.checks.push_back(residual_check("unitality", s.unitality_residual, c.tol));
    out.checks.push_back(residual_check("reality", s.reality_residual, c.tol));
    out.checks.push_back(residual_check("structure_equations", s.structure_residual, c.tol));
    out.checks.push_back(residual_check("oracle_agreement", s.oracle_residual, c.tol));
    out.checks.push_back(residual_check("lindblad_form", s.lindblad_residual, c.tol));
    out.results["d"] = s.dim;
    out.results["channels"] = s.channels;
    out.results["sample_pairs"] = s.sample_pairs;
    out.results["seed"] = c.seed;
}

void run_simulate(const RunConfig& c, RunOutput& out) {
    if (c.experiment != "ed-vs-sd")
        throw SchemaError("unknown experiment '" + c.experiment + "'");
    if (c.dt_list.size() < 2) throw SchemaError("simulate needs 'dt_list' with at least two steps");
    CoefficientFile in = read_single_input(c);

    // canonical exponent: the symmetric-gauge table the slot scheme exponentiates
    CoefficientBlock e;
    if (in.kind == TableKind::Strat && in.kappa->imag_part() == 0.0)
        e = in.table;
    else
        e = ito_to_strat(as_ito(in), GaugeParameter::symmetric());

    const int slots = static_cast<int>(std::lround(c.t_final / c.dt_list.front()));
    TestFunctionPair tf = TestFunctionPair::constant(c.f_sample, c.g_sample, slots);
    Vec u = Vec::Zero(e.dim());
    u(0) = 1.0;

    SweepResult r = convergence_sweep(e, tf, u, u, c.t_final, c.dt_list, c.oracle_steps);

    std::vector<double> ito_errs, ed_errs;
    for (const SweepRow& row : r.rows) {
        ito_errs.push_back(row.err_ito);
        ed_errs.push_back(row.err_ed);
    }
    out.checks.push_back({"ito_scheme_converges", last_ratio(ito_errs), 0.75, r.ito_converging});
    out.checks.push_back({"exp_scheme_converges", last_ratio(ed_errs), 0.75, r.ed_converging});
    out.results["target_ito"] = complex_to_json(r.target_ito);
    out.results["target_ed"] = complex_to_json(r.target_ed);
    out.results["target_sd"] = complex_to_json(r.target_sd);
    out.results["separation_ed_sd"] = std::abs(r.target_ed - r.target_sd);
    out.results["sd_converging"] = r.sd_converging;
    out.results["dt_list"] = c.dt_list;
    out.results["t_final"] = c.t_final;
    out.results["f"] = complex_to_json(c.f_sample);
    out.results["g"] = complex_to_json(c.g_sample);
    out.results["oracle_steps"] = c.oracle_steps;
    out.text_files.emplace_back("sweep.csv", sweep_csv(r));
}

void run_wz(const RunConfig& c, RunOutput& out) {
    if (!c.inputs.empty())
        throw SchemaError("wz takes no input files; 'v' and 'h' come from the config");
    if (c.coupling.size() == 0 || c.drift.size() == 0)
        throw SchemaError("wz needs 'v' and 'h' matrices in the config");
    if (c.lambda_list.size() < 2)
        throw SchemaError("wz needs 'lambda_list' with at least two widths");
    const double min_l = *std::min_element(c.lambda_list.begin(), c.lambda_list.end());
    if (!(min_l > 0.0)) throw SchemaError("'lambda_list' entries must be positive");
    const double dt_path = c.dt_path > 0.0 ? c.dt_path : fitted_step(c.t_final, min_l * min_l / 10.0);
    const double dt_ode = c.dt_ode > 0.0 ? c.dt_ode : fitted_step(c.t_final, min_l / 10.0);

    WzResult r = wz_convergence(c.coupling, c.drift, c.t_final, c.lambda_list, c.n_seeds, c.seed,
                                dt_path, dt_ode);

    std::vector<double> means;
    for (const WzRow& row : r.rows) means.push_back(row.mean_err);
    out.checks.push_back({"colored_noise_converges", last_ratio(means), 0.85, r.converging});
    out.results["lambda_list"] = c.lambda_list;
    out.results["n_seeds"] = c.n_seeds;
    out.results["seed"] = c.seed;
    out.results["dt_path"] = dt_path;
    out.results["dt_ode"] = dt_ode;
    out.results["t_final"] = c.t_final;
    out.text_files.emplace_back("wz.csv", wz_csv(r));
}

} // namespace

RunConfig config_from_json(const Json& j) {
    if (!j.is_object()) throw SchemaError("config must be a JSON object");
    static const std::set<std::string> known{
        "task",   "inputs",  "out_dir", "kappa",       "tol",         "seed",
        "experiment", "dt_list", "t_final", "f",       "g",           "oracle_steps",
        "v",      "h",       "lambda_list", "n_seeds", "dt_path",     "dt_ode"};
    SchemaCheck sc;
    for (const auto& item : j.items())
        if (!known.count(item.key())) sc.fail("unknown key '" + item.key() + "'");

    RunConfig c;
    if (j.contains("task")) {
        if (j["task"].is_string() && known_tasks().count(j["task"].get<std::string>()))
            c.task = j["task"].get<std::string>();
        else
            sc.fail("'task' must be one of convert, check, hp, add, flow, simulate, wz");
    }
    if (j.contains("inputs")) {
        if (j["inputs"].is_array()) {
            for (const auto& item : j["inputs"]) {
                if (item.is_string())
                    c.inputs.push_back(item.get<std::string>());
                else
                    sc.fail("'inputs' entries must be strings");
            }
        } else {
            sc.fail("'inputs' must be an array of paths");
        }
    }
    if (j.contains("out_dir")) {
        if (j["out_dir"].is_string())
            c.out_dir = j["out_dir"].get<std::string>();
        else
            sc.fail("'out_dir' must be a string");
    }
    if (j.contains("kappa")) {
        try {
            cx kappa = complex_from_json(j["kappa"], "'kappa'");
            if (kappa.real() != 0.5)
                sc.fail("'kappa' must have real part exactly 1/2; only the imaginary part "
                        "is a free gauge choice");
            else
                c.kappa = GaugeParameter(kappa);
        } catch (const SchemaError& e) {
            sc.fail(e.what());
        }
    }
    if (j.contains("tol")) {
        if (positive_number(j["tol"]))
            c.tol = j["tol"].get<double>();
        else
            sc.fail("'tol' must be a positive number");
    }
    if (j.contains("seed")) {
        if (j["seed"].is_number_unsigned() ||
            (j["seed"].is_number_integer() && j["seed"].get<long long>() >= 0))
            c.seed = j["seed"].get<std::uint64_t>();
        else
            sc.fail("'seed' must be a non-negative integer");
    }
    if (j.contains("experiment")) {
        if (j["experiment"].is_string())
            c.experiment = j["experiment"].get<std::string>();
        else
            sc.fail("'experiment' must be a string");
    }
    for (const char* key : {"dt_list", "lambda_list"}) {
        if (!j.contains(key)) continue;
        std::vector<double>& dest = std::string(key) == "dt_list" ? c.dt_list : c.lambda_list;
        if (j[key].is_array()) {
            for (const auto& item : j[key]) {
                if (positive_number(item))
                    dest.push_back(item.get<double>());
                else
                    sc.fail(std::string("'") + key + "' entries must be positive numbers");
            }
        } else {
            sc.fail(std::string("'") + key + "' must be an array of numbers");
        }
    }
    if (j.contains("t_final")) {
        if (positive_number(j["t_final"]))
            c.t_final = j["t_final"].get<double>();
        else
            sc.fail("'t_final' must be a positive number");
    }
    for (const char* key : {"f", "g"}) {
        if (!j.contains(key)) continue;
        try {
            cx z = complex_from_json(j[key], std::string("'") + key + "'");
            (std::string(key) == "f" ? c.f_sample : c.g_sample) = z;
        } catch (const SchemaError& e) {
            sc.fail(e.what());
        }
    }
    if (j.contains("oracle_steps")) {
        if (j["oracle_steps"].is_number_integer() && j["oracle_steps"].get<int>() >= 1)
            c.oracle_steps = j["oracle_steps"].get<int>();
        else
            sc.fail("'oracle_steps' must be a positive integer");
    }
    for (const char* key : {"v", "h"}) {
        if (!j.contains(key)) continue;
        try {
            Mat m = matrix_from_json(j[key], std::string("'") + key + "'");
            (std::string(key) == "v" ? c.coupling : c.drift) = std::move(m);
        } catch (const SchemaError& e) {
            sc.fail(e.what());
        }
    }
    if (j.contains("n_seeds")) {
        if (j["n_seeds"].is_number_integer() && j["n_seeds"].get<int>() >= 1)
            c.n_seeds = j["n_seeds"].get<int>();
        else
            sc.fail("'n_seeds' must be a positive integer");
    }
    for (const char* key : {"dt_path", "dt_ode"}) {
        if (!j.contains(key)) continue;
        if (positive_number(j[key]))
            (std::string(key) == "dt_path" ? c.dt_path : c.dt_ode) = j[key].get<double>();
        else
            sc.fail(std::string("'") + key + "' must be a positive number");
    }
    sc.finish();
    return c;
}

RunConfig load_config(const std::string& path) {
    try {
        return config_from_json(read_json_file(path));
    } catch (const SchemaError& e) {
        throw SchemaError("'" + path + "': " + e.what());
    }
}

int run(const RunConfig& config) {
    RunOutput out;
    if (config.task == "convert")
        run_convert(config, out);
    else if (config.task == "check")
        run_check(config, out);
    else if (config.task == "hp")
        run_hp(config, out);
    else if (config.task == "add")
        run_add(config, out);
    else if (config.task == "flow")
        run_flow(config, out);
    else if (config.task == "simulate")
        run_simulate(config, out);
    else if (config.task == "wz")
        run_wz(config, out);
    else
        throw SchemaError("no task selected; pass a subcommand or a config with 'task'");

    bool all_passed = true;
    for (const CheckLine& ck : out.checks) {
        all_passed = all_passed && ck.passed;
        std::printf("%s %s (residual=%.3e, tol=%.3e)\n", ck.passed ? "pass" : "FAIL",
                    ck.name.c_str(), ck.residual, ck.tolerance);
    }
    std::printf("%s: %s\n", config.task.c_str(), all_passed ? "PASS" : "FAIL");

    Json report;
    report["task"] = config.task;
    report["tolerance"] = config.tol;
    report["passed"] = all_passed;
    Json checks = Json::array();
    for (const CheckLine& ck : out.checks)
        checks.push_back({{"name", ck.name},
                          {"residual", ck.residual},
                          {"tolerance", ck.tolerance},
                          {"passed", ck.passed}});
    report["checks"] = std::move(checks);
    report["results"] = out.results;
    Json artifacts = Json::array({"report.json"});
    for (const auto& [name, body] : out.text_files) artifacts.push_back(name);
    for (const auto& [name, doc] : out.json_files) artifacts.push_back(name);
    report["artifacts"] = std::move(artifacts);
    report["meta"] = Json{{"timestamp", timestamp_utc()}};

    // single writer: every artifact lands after the computation is done
    std::filesystem::create_directories(config.out_dir);
    for (const auto& [name, body] : out.text_files)
        write_text_file(config.out_dir + "/" + name, body);
    for (const auto& [name, doc] : out.json_files) write_json_file(config.out_dir + "/" + name, doc);
    write_json_file(config.out_dir + "/report.json", report);

    return all_passed ? 0 : 2;
}

} // namespace qstoch
