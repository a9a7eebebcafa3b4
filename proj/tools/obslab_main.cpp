// obslab batch experiment driver: seeded runs, JSON reports, CSV plot data.
// Exit codes: 0 all configured assertions pass, 1 assertion failures,
// 2 invalid configuration, 3 numerical guard violation.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "obslab/obslab.hpp"

namespace ob = obslab;
using ordered_json = nlohmann::ordered_json;

namespace {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

const ordered_json& field(const ordered_json& j, const std::string& key) {
    if (!j.contains(key)) throw ConfigError("missing field '" + key + "'");
    return j.at(key);
}

double number(const ordered_json& j, const std::string& key) {
    const auto& v = field(j, key);
    if (!v.is_number()) throw ConfigError("field '" + key + "' must be a number");
    return v.get<double>();
}

int integer(const ordered_json& j, const std::string& key) {
    const auto& v = field(j, key);
    if (!v.is_number_integer()) throw ConfigError("field '" + key + "' must be an integer");
    return v.get<int>();
}

std::vector<double> number_list(const ordered_json& j, const std::string& key) {
    const auto& v = field(j, key);
    if (!v.is_array() || v.empty()) throw ConfigError("field '" + key + "' must be a nonempty array");
    std::vector<double> out;
    for (const auto& e : v) {
        if (!e.is_number()) throw ConfigError("field '" + key + "' must hold numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

ob::GridSpec parse_grid(const ordered_json& cfg) {
    const auto& g = field(cfg, "grid");
    try {
        return ob::GridSpec(integer(g, "d"), number(g, "half_width"), integer(g, "n_per_axis"));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

ob::SemigroupKind parse_kind(const ordered_json& cfg) {
    const std::string k = field(cfg, "semigroup").get<std::string>();
    if (k == "gw") return ob::SemigroupKind::gauss_weierstrass;
    if (k == "ou") return ob::SemigroupKind::ornstein_uhlenbeck;
    throw ConfigError("semigroup must be 'gw' or 'ou'");
}

struct ThickConfig {
    ob::ThickSetSpec spec;
    std::optional<ob::SlabAxis> first_slab; // for gap probes, d = 1
};

ThickConfig parse_thick_set(const ordered_json& cfg, int d) {
    const auto& t = field(cfg, "thick_set");
    ThickConfig out{ob::ThickSetSpec{{}, 1.0, ob::AllSpace{}}, std::nullopt};
    out.spec.windows = number_list(t, "windows");
    out.spec.density = number(t, "rho");
    if (t.contains("all") && t.at("all").get<bool>()) return out;
    const auto periods = number_list(t, "period");
    const auto widths = number_list(t, "width");
    if (static_cast<int>(periods.size()) != d || static_cast<int>(widths.size()) != d)
        throw ConfigError("thick_set: period/width arrays must match the dimension");
    std::vector<ob::SlabAxis> slabs;
    for (int a = 0; a < d; ++a) {
        double phase = 0.0;
        if (t.contains("phase")) phase = number_list(t, "phase")[static_cast<std::size_t>(a)];
        slabs.push_back(ob::SlabAxis{periods[static_cast<std::size_t>(a)],
                                     widths[static_cast<std::size_t>(a)], phase});
    }
    out.first_slab = slabs.front();
    out.spec.geometry = slabs;
    return out;
}

ob::TestFunctionKind parse_corpus_kind(const ordered_json& c) {
    const std::string k = field(c, "kind").get<std::string>();
    const double lam = c.contains("lambda_max") ? number(c, "lambda_max") : 8.0;
    if (k == "band_limited") return ob::TestFunctionKind::band_limited(lam);
    if (k == "gaussian_bumps") return ob::TestFunctionKind::gaussian_bumps();
    if (k == "mixed") return ob::TestFunctionKind::mixed(lam);
    throw ConfigError("corpus kind must be band_limited, gaussian_bumps or mixed");
}

std::vector<ob::SampledField> parse_corpus(const ordered_json& cfg, std::uint64_t seed,
                                           const ob::GridSpec& g) {
    const auto& c = field(cfg, "corpus");
    return ob::generate_test_functions(parse_corpus_kind(c), integer(c, "count"), seed, g);
}

double parse_r(const ordered_json& cfg) {
    const auto& v = field(cfg, "r");
    if (v.is_string()) {
        if (v.get<std::string>() == "inf") return std::numeric_limits<double>::infinity();
        throw ConfigError("r must be a number >= 1 or \"inf\"");
    }
    if (!v.is_number()) throw ConfigError("r must be a number >= 1 or \"inf\"");
    return v.get<double>();
}

// ---------------------------------------------------------------------------

struct RunContext {
    std::string command;
    std::uint64_t seed = 0;
    std::string out_dir = ".";
    bool quiet = false;
    ordered_json config;
    std::vector<ob::CheckResult> checks;
    ordered_json results = ordered_json::object();
    std::string csv;

    void check(const std::string& name, double value, double tolerance, bool pass) {
        checks.push_back(ob::CheckResult{name, value, tolerance, pass});
    }

    // value must lie within tolerance of target
    void check_near(const std::string& name, double value, double target, double tolerance) {
        check(name, value, tolerance, std::abs(value - target) <= tolerance);
    }

    int finish() {
        ordered_json rep;
        rep["tool"] = "obslab";
        rep["version"] = ob::version_string;
        rep["command"] = command;
        rep["seed"] = seed;
        rep["config"] = config;
        rep["results"] = results;
        ordered_json checks_json = ordered_json::array();
        ordered_json failures = ordered_json::array();
        bool all_pass = true;
        for (const auto& c : checks) {
            checks_json.push_back(ob::to_json(c));
            if (!c.pass) {
                failures.push_back(c.name);
                all_pass = false;
            }
            if (!quiet)
                std::printf("[%s] %s: value=%.10g tolerance=%.3g\n", c.pass ? "PASS" : "FAIL",
                            c.name.c_str(), c.value, c.tolerance);
        }
        rep["checks"] = checks_json;
        rep["failures"] = failures;

        namespace fs = std::filesystem;
        fs::create_directories(out_dir);
        {
            std::ofstream os(fs::path(out_dir) / (command + "-report.json"), std::ios::binary);
            os << rep.dump(2) << "\n";
        }
        if (!csv.empty()) {
            std::ofstream os(fs::path(out_dir) / (command + "-cells.csv"), std::ios::binary);
            os << csv;
        }
        if (!quiet)
            std::printf("%s: %s\n", command.c_str(), all_pass ? "all checks passed" : "FAILURES");
        return all_pass ? 0 : 1;
    }
};

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

void run_verify_kernels(RunContext& ctx) {
    const ob::GridSpec g = parse_grid(ctx.config);
    const double l1_tol = number(ctx.config, "l1_tolerance");
    const double mehler_tol = number(ctx.config, "mehler_tolerance");
    ordered_json rows = ordered_json::array();
    ctx.csv = "kernel,t,value,target,tolerance,pass\n";

    for (double t : number_list(ctx.config, "gw_times")) {
        const double v = ob::l1_norm(ob::sample_gw_kernel(g, t));
        ctx.check_near("gw_kernel_l1_t=" + std::to_string(t), v, 1.0, l1_tol);
        ctx.csv += "gw," + ob::csv_number(t) + "," + ob::csv_number(v) + ",1," +
                   ob::csv_number(l1_tol) + "," + (std::abs(v - 1.0) <= l1_tol ? "1" : "0") + "\n";
        rows.push_back(ordered_json{{"kernel", "gw"}, {"t", t}, {"l1", v}});
    }

    const ob::PropagatorConfig ou(ob::SemigroupKind::ornstein_uhlenbeck, g);
    const ob::SampledField one(g, std::vector<double>(g.point_count(), 1.0));
    for (double t : number_list(ctx.config, "ou_times")) {
        const ob::OuField s = ob::ou_step(one, t, ou, /*enforce_decay=*/false);
        double worst = 0.0;
        std::size_t safe_points = 0;
        for (std::size_t i = 0; i < s.field.values.size(); ++i) {
            if (!s.safe[i]) continue;
            ++safe_points;
            worst = std::max(worst, std::abs(s.field.values[i] - 1.0));
        }
        ob::guard(safe_points > 0, "mehler constancy: empty safe region");
        ctx.check("mehler_constancy_t=" + std::to_string(t), worst, mehler_tol,
                  worst <= mehler_tol);
        ctx.csv += "mehler," + ob::csv_number(t) + "," + ob::csv_number(worst) + ",0," +
                   ob::csv_number(mehler_tol) + "," + (worst <= mehler_tol ? "1" : "0") + "\n";
        rows.push_back(ordered_json{
            {"kernel", "mehler"}, {"t", t}, {"constancy_error", worst},
            {"safe_points", safe_points}});
    }
    ctx.results["kernels"] = rows;
}

void run_verify_up(RunContext& ctx) {
    const ob::GridSpec g = parse_grid(ctx.config);
    const ThickConfig tc = parse_thick_set(ctx.config, g.d);
    const ob::ObservationMask mask = ob::make_mask(tc.spec, g);
    const auto lambdas = number_list(ctx.config, "lambdas");
    const double min_r2 = number(ctx.config, "min_r2");
    const double full_tol = number(ctx.config, "full_mask_d1_tolerance");

    auto fns = parse_corpus(ctx.config, ctx.seed, g);
    if (g.d == 1 && tc.first_slab) {
        const double lam_max = *std::max_element(lambdas.begin(), lambdas.end());
        for (auto& p : ob::gap_probe_fields(g, *tc.first_slab, lam_max)) fns.push_back(p);
    }

    const ob::FitReport rep =
        ob::measure_up(mask, tc.spec.windows, tc.spec.density, lambdas, fns);
    ctx.results["fit"] = ob::to_json(rep);
    ctx.csv = ob::fit_report_csv(rep);
    ctx.check("up_d1_positive", rep.fitted.at("d1"), 0.0, rep.fitted.at("d1") > 0.0);
    ctx.check("up_r2", rep.r2, min_r2, rep.r2 >= min_r2);
    ctx.check("up_violations", rep.violation_count, 0, rep.violation_count == 0);

    const ob::ThickSetSpec full{tc.spec.windows, tc.spec.density, ob::AllSpace{}};
    const ob::FitReport ctrl =
        ob::measure_up(ob::make_mask(full, g), tc.spec.windows, tc.spec.density, lambdas, fns);
    ctx.results["full_mask_fit"] = ob::to_json(ctrl);
    ctx.check_near("up_full_mask_d1", ctrl.fitted.at("d1"), 0.0, full_tol);
}

std::vector<ob::SampledField> diss_corpus(const RunContext& ctx, const ob::GridSpec& g) {
    auto fns = parse_corpus(ctx.config, ctx.seed, g);
    if (ctx.config.contains("wave_probes")) {
        const auto& w = ctx.config.at("wave_probes");
        std::vector<double> freqs;
        for (double xi = number(w, "min"); xi <= number(w, "max") + 1e-12; xi += number(w, "step"))
            freqs.push_back(xi);
        for (auto& f : ob::cosine_probe_fields(g, freqs)) fns.push_back(f);
    }
    return fns;
}

void run_verify_diss(RunContext& ctx) {
    const ob::GridSpec g = parse_grid(ctx.config);
    const ob::PropagatorConfig cfg(parse_kind(ctx.config), g);
    const auto lambdas = number_list(ctx.config, "lambdas");
    const auto times = number_list(ctx.config, "times");
    const double min_r2 = number(ctx.config, "min_r2");
    const double inflation = number(ctx.config, "inflation");

    const auto fns = diss_corpus(ctx, g);
    const ob::FitReport rep = ob::measure_diss(cfg, lambdas, times, fns);
    ctx.results["fit"] = ob::to_json(rep);
    ctx.csv = ob::fit_report_csv(rep, "ratio");
    ctx.check("diss_d3_positive", rep.fitted.at("d3"), 0.0, rep.fitted.at("d3") > 0.0);
    ctx.check("diss_r2", rep.r2, min_r2, rep.r2 >= min_r2);

    const ob::FitReport held = ob::measure_diss(
        cfg, number_list(ctx.config, "heldout_lambdas"), number_list(ctx.config, "heldout_times"),
        fns, std::make_pair(inflation * rep.fitted.at("d2"), rep.fitted.at("d3")));
    ctx.results["heldout"] = ob::to_json(held);
    ctx.check("diss_heldout_violations", held.violation_count, 0, held.violation_count == 0);
}

void run_verify_lemma(RunContext& ctx) {
    const ob::GridSpec g = parse_grid(ctx.config);
    const auto lambdas = number_list(ctx.config, "lambdas");
    const auto s_values = number_list(ctx.config, "s_values");
    const double inflation = number(ctx.config, "inflation");
    const double limit_tol = number(ctx.config, "limit_tolerance");
    const double limit_s = number(ctx.config, "limit_s");

    const ob::FitReport rep = ob::measure_lemma_l1(g, lambdas, s_values);
    ctx.results["fit"] = ob::to_json(rep);
    ctx.csv = ob::fit_report_csv(rep, "value");
    ctx.check("lemma_d3_positive", rep.fitted.at("d3"), 0.0, rep.fitted.at("d3") > 0.0);

    const ob::FitReport held = ob::measure_lemma_l1(
        g, number_list(ctx.config, "heldout_lambdas"), number_list(ctx.config, "heldout_s"),
        std::make_pair(inflation * rep.fitted.at("d2"), rep.fitted.at("d3")));
    ctx.results["heldout"] = ob::to_json(held);
    ctx.check("lemma_heldout_violations", held.violation_count, 0, held.violation_count == 0);

    const ob::FitReport limit = ob::measure_lemma_l1(g, {0.0}, {limit_s},
                                                     std::make_pair(1.0, 1.0));
    const double limit_value = limit.cells.front().measured;
    ctx.results["vanishing_cutoff_limit"] = limit_value;
    ctx.check_near("lemma_limit_value", limit_value, 1.0, limit_tol);
}

std::vector<double> measure_cobs_curve(RunContext& ctx, const ob::PropagatorConfig& cfg,
                                       const ob::ObservationMask& mask,
                                       const std::vector<double>& horizons, double r,
                                       int time_steps) {
    const auto fns = parse_corpus(ctx.config, ctx.seed, cfg.grid);
    std::vector<double> measured;
    for (double T : horizons)
        measured.push_back(ob::estimate_cobs(cfg, mask, T, r, time_steps, fns));
    return measured;
}

void run_estimate_cobs(RunContext& ctx) {
    const ob::GridSpec g = parse_grid(ctx.config);
    const ob::PropagatorConfig cfg(parse_kind(ctx.config), g);
    const ThickConfig tc = parse_thick_set(ctx.config, g.d);
    const ob::ObservationMask mask = ob::make_mask(tc.spec, g);
    const auto horizons = number_list(ctx.config, "horizons");
    const double r = parse_r(ctx.config);
    const int steps = integer(ctx.config, "time_steps");

    const auto measured = measure_cobs_curve(ctx, cfg, mask, horizons, r, steps);
    ordered_json rows = ordered_json::array();
    ctx.csv = "T,c_obs\n";
    bool decreasing = true;
    for (std::size_t i = 0; i < horizons.size(); ++i) {
        rows.push_back(ordered_json{{"T", horizons[i]}, {"c_obs", measured[i]}});
        ctx.csv += ob::csv_number(horizons[i]) + "," + ob::csv_number(measured[i]) + "\n";
        if (i > 0 && measured[i] > measured[i - 1]) decreasing = false;
        ctx.check("cobs_finite_T=" + std::to_string(horizons[i]), measured[i], 0.0,
                  std::isfinite(measured[i]) && measured[i] > 0.0);
    }
    ctx.results["curve"] = rows;
    if (ctx.config.contains("require_decreasing") && ctx.config.at("require_decreasing").get<bool>())
        ctx.check("cobs_decreasing", decreasing ? 1.0 : 0.0, 0.0, decreasing);
}

void run_fit_cobs(RunContext& ctx) {
    const ob::GridSpec g = parse_grid(ctx.config);
    const ob::PropagatorConfig cfg(parse_kind(ctx.config), g);
    const ThickConfig tc = parse_thick_set(ctx.config, g.d);
    const ob::ObservationMask mask = ob::make_mask(tc.spec, g);
    const auto horizons = number_list(ctx.config, "horizons");
    const double r = parse_r(ctx.config);
    const int steps = integer(ctx.config, "time_steps");
    const double min_r2 = number(ctx.config, "min_r2");

    ob::ObsParams params;
    const auto& pj = field(ctx.config, "params");
    params.gamma1 = number(pj, "gamma1");
    params.gamma2 = number(pj, "gamma2");
    params.gamma3 = number(pj, "gamma3");
    params.r = r;
    params.validate();

    const auto measured = measure_cobs_curve(ctx, cfg, mask, horizons, r, steps);
    const ob::CobsFit fit = ob::fit_cobs_scaling(horizons, measured, params);

    ordered_json rows = ordered_json::array();
    ctx.csv = "T,measured,fitted\n";
    const ob::CobsShape& s = fit.shape;
    for (std::size_t i = 0; i < horizons.size(); ++i) {
        const double predicted = ob::cobs_form(horizons[i], s, params);
        rows.push_back(ordered_json{
            {"T", horizons[i]}, {"measured", measured[i]}, {"fitted", predicted}});
        ctx.csv += ob::csv_number(horizons[i]) + "," + ob::csv_number(measured[i]) + "," +
                   ob::csv_number(predicted) + "\n";
    }
    ctx.results["curve"] = rows;
    ctx.results["shape"] = ordered_json{{"C1", s.c1}, {"C2", s.c2}, {"C3", s.c3}, {"r2", fit.r2}};
    ctx.check("cobs_fit_r2", fit.r2, min_r2, fit.r2 >= min_r2);
    if (ctx.config.contains("require_positive_c2") &&
        ctx.config.at("require_positive_c2").get<bool>())
        ctx.check("cobs_c2_positive", s.c2, 0.0, s.c2 > 0.0);
}

void run_duality_check(RunContext& ctx) {
    ob::ControlSystem sys = [&] {
        if (ctx.config.contains("benchmark")) {
            const std::string b = ctx.config.at("benchmark").get<std::string>();
            if (b != "scalar") throw ConfigError("unknown benchmark '" + b + "'");
            ob::Matrix A(1, 1), B(1, 1);
            A(0, 0) = 1.0;
            B(0, 0) = 1.0;
            const int steps = ctx.config.contains("time_steps")
                                  ? integer(ctx.config, "time_steps")
                                  : 64;
            return ob::ControlSystem::build(A, B, 1.0, steps);
        }
        return ob::control_system_from_json(field(ctx.config, "system"));
    }();
    const auto epsilons = number_list(ctx.config, "epsilons");
    const double tol = number(ctx.config, "gap_tolerance");
    const int samples = integer(ctx.config, "sample_count");

    const ob::DualityReport rep = ob::check_duality(sys, epsilons, tol, samples, ctx.seed);
    ctx.results["system"] = ob::control_system_to_json(sys);
    ctx.results["duality"] = ob::to_json(rep);
    ctx.csv = "eps,c_control\n";
    std::vector<double> sorted_eps = epsilons;
    std::sort(sorted_eps.begin(), sorted_eps.end(), std::greater<double>());
    for (std::size_t i = 0; i < sorted_eps.size(); ++i)
        ctx.csv += ob::csv_number(sorted_eps[i]) + "," +
                   ob::csv_number(rep.control_costs_by_eps[i]) + "\n";

    ctx.check("duality_observable", rep.observable ? 1.0 : 0.0, 0.0, rep.observable);
    ctx.check("duality_gap", rep.relative_gap, tol, rep.pass);
    if (ctx.config.contains("closed_form")) {
        const double cf = number(ctx.config, "closed_form");
        const double cf_tol = number(ctx.config, "closed_form_tolerance");
        ctx.check("c_control_vs_closed_form", std::abs(rep.c_control - cf) / cf, cf_tol,
                  std::abs(rep.c_control - cf) / cf <= cf_tol);
        ctx.check("c_obs_vs_closed_form", std::abs(rep.c_obs - cf) / cf, cf_tol,
                  std::abs(rep.c_obs - cf) / cf <= cf_tol);
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"obslab: observability and null-controllability laboratory"};
    app.require_subcommand(1);

    std::string config_path;
    std::uint64_t seed = 0;
    std::string out_dir = ".";
    bool quiet = false;

    const std::vector<std::pair<std::string, std::function<void(RunContext&)>>> commands = {
        {"verify-kernels", run_verify_kernels}, {"verify-up", run_verify_up},
        {"verify-diss", run_verify_diss},       {"verify-lemma-l1", run_verify_lemma},
        {"estimate-cobs", run_estimate_cobs},   {"fit-cobs", run_fit_cobs},
        {"duality-check", run_duality_check},
    };

    for (const auto& [name, fn] : commands) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "experiment configuration (JSON)")->required();
        sub->add_option("--seed", seed, "corpus seed (mandatory, no implicit entropy)")->required();
        sub->add_option("--out", out_dir, "output directory for report and plot data");
        sub->add_flag("--quiet", quiet, "suppress per-check lines");
    }

    CLI11_PARSE(app, argc, argv);

    RunContext ctx;
    for (const auto& [name, fn] : commands) {
        if (app.got_subcommand(name)) {
            ctx.command = name;
            ctx.seed = seed;
            ctx.out_dir = out_dir;
            ctx.quiet = quiet;

            try {
                std::ifstream is(config_path);
                if (!is) throw ConfigError("cannot open config file '" + config_path + "'");
                ctx.config = ordered_json::parse(is, nullptr, true, true);
            } catch (const ordered_json::parse_error& e) {
                std::cerr << "config error: " << e.what() << "\n";
                return 2;
            } catch (const ConfigError& e) {
                std::cerr << "config error: " << e.what() << "\n";
                return 2;
            }

            try {
                fn(ctx);
            } catch (const ConfigError& e) {
                std::cerr << "config error: " << e.what() << "\n";
                return 2;
            } catch (const ordered_json::exception& e) {
                std::cerr << "config error: " << e.what() << "\n";
                return 2;
            } catch (const std::exception& e) {
                std::cerr << "numerical guard: " << e.what() << "\n";
                return 3;
            }
            return ctx.finish();
        }
    }
    return 2;
}
