#include "rmtsnr/errors.hpp"
#include "rmtsnr/harness.hpp"
#include "rmtsnr/io.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace rmtsnr;

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitIo = 4;

double parse_number(const std::string& text, const std::string& flag) {
    double v = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    while (first < last && *first == ' ') ++first;
    while (last > first && last[-1] == ' ') --last;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last || first == last)
        throw ConfigError(flag + ": '" + text + "' is not a number");
    return v;
}

std::vector<double> parse_list(const std::string& text, const std::string& flag) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_number(item, flag));
    return out;
}

/// "a:b:step" -> a, a + step, ..., b
std::vector<double> parse_snr_range(const std::string& text) {
    std::vector<double> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ':')) parts.push_back(parse_number(item, "--snr-db"));
    if (parts.size() == 1) return parts;
    if (parts.size() != 3 || !(parts[2] > 0.0) || parts[1] < parts[0])
        throw ConfigError("--snr-db expects a:b:step with a <= b and step > 0");
    return arithmetic_range(parts[0], parts[1], parts[2]);
}

std::vector<Dims> parse_dims(const std::vector<std::string>& items) {
    std::vector<Dims> out;
    for (const auto& item : items) {
        const auto x = item.find('x');
        if (x == std::string::npos) throw ConfigError("--dims expects MxK, got '" + item + "'");
        const double m = parse_number(item.substr(0, x), "--dims");
        const double k = parse_number(item.substr(x + 1), "--dims");
        if (m < 1 || k < 1 || m != static_cast<std::size_t>(m) || k != static_cast<std::size_t>(k))
            throw ConfigError("--dims expects positive integers, got '" + item + "'");
        out.push_back({static_cast<std::size_t>(m), static_cast<std::size_t>(k)});
    }
    return out;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct Flags {
    std::string config_path;
    std::size_t trials = 0;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string lambdas;
    std::string snr_db;
    std::string out;
    std::string parallelism;
    bool dump_trials = false;
};

RunConfig build_config(const Flags& f, const std::string& default_scenario) {
    RunConfig c;
    c.scenario = default_scenario;
    if (!f.config_path.empty()) {
        c = config_from_json(read_file(f.config_path));
        if (c.scenario.empty()) c.scenario = default_scenario;
    }
    if (f.trials) c.trials = f.trials;
    if (f.seed_set) c.master_seed = f.seed;
    if (!f.lambdas.empty()) {
        c.lambda_grid = parse_list(f.lambdas, "--lambdas");
        validate_lambda_grid(c.lambda_grid);
    }
    if (!f.snr_db.empty()) c.snr_points_db = parse_snr_range(f.snr_db);
    if (!f.out.empty()) c.output_path = f.out;
    if (!f.parallelism.empty()) {
        if (f.parallelism == "auto") {
            c.parallelism = 0;
        } else {
            const double p = parse_number(f.parallelism, "--parallelism");
            if (p < 1 || p != static_cast<std::size_t>(p))
                throw ConfigError("--parallelism expects a positive count or 'auto'");
            c.parallelism = static_cast<std::size_t>(p);
        }
    }
    if (f.dump_trials) c.dump_trials = true;
    if (c.trials == 0) throw ConfigError("--trials must be >= 1");
    return c;
}

void emit(const RunConfig& config, const std::string& text) {
    if (config.output_path.empty())
        std::cout << text;
    else
        io::write_text(config.output_path, text);
}

std::filesystem::path trials_path(const RunConfig& config) {
    std::filesystem::path p = config.output_path;
    p.replace_extension();
    p += ".trials.csv";
    return p;
}

void emit_scenario(const RunConfig& config, const ScenarioResult& result) {
    std::ostringstream metrics;
    write_metrics_csv(metrics, result, config);
    emit(config, metrics.str());
    if (config.dump_trials) {
        std::ostringstream trials;
        write_trials_csv(trials, result, config);
        if (config.output_path.empty())
            std::cout << '\n' << trials.str();
        else
            io::write_text(trials_path(config), trials.str());
    }
    if (result.failed_trials > 0) {
        std::cerr << "warning: " << result.failed_trials
                  << " trial(s) failed and were counted as degenerate; first: "
                  << result.first_failure << '\n';
    }
}

void add_run_flags(CLI::App* cmd, Flags& f) {
    cmd->add_option("--config", f.config_path, "JSON run configuration");
    cmd->add_option("--trials", f.trials, "Monte-Carlo trials per SNR point");
    cmd->add_option("--seed", f.seed, "Master seed")->each([&f](const std::string&) {
        f.seed_set = true;
    });
    cmd->add_option("--lambdas", f.lambdas, "Comma-separated lambda grid");
    cmd->add_option("--snr-db", f.snr_db, "SNR points as a:b:step (dB)");
    cmd->add_option("--out", f.out, "Output CSV path (stdout when omitted)");
    cmd->add_option("--parallelism", f.parallelism, "Worker threads, or 'auto'");
    cmd->add_flag("--dump-trials", f.dump_trials, "Also write per-trial estimates");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Blind SNR estimation from ridge-regression costs"};
    app.require_subcommand(1);

    Flags flags;

    std::string y_path, wbar_path, psi_path, est_lambdas = "0.001,0.002,0.003,0.004";
    bool as_json = false;
    auto* estimate = app.add_subcommand("estimate", "Estimate the SNR of a single observation");
    estimate->add_option("--y", y_path, "Received vector (CSV)")->required();
    estimate->add_option("--wbar", wbar_path, "Uncorrelated design matrix (CSV)")->required();
    estimate->add_option("--psi", psi_path, "Correlation matrix, dense CSV or diag: row")
        ->required();
    estimate->add_option("--lambdas", est_lambdas, "Comma-separated lambda grid");
    estimate->add_flag("--json", as_json, "Print a JSON object instead of text");

    std::string scenario_name;
    std::string dump_dir;
    auto* scenario = app.add_subcommand("scenario", "Run a catalog scenario");
    scenario->add_option("name", scenario_name, "a, b, c, d, g, h, i or fig1")->required();
    scenario->add_option("--dump", dump_dir,
                         "Write y.csv, wbar.csv and psi.csv for one trial instead of running");
    add_run_flags(scenario, flags);

    auto* theorem = app.add_subcommand("verify-theorem", "Compare mean ridge cost to its prediction");
    std::size_t draws = 0;
    theorem->add_option("--draws", draws, "(x0, n) draws per lambda");
    add_run_flags(theorem, flags);

    std::vector<std::string> dims;
    auto* sweep = app.add_subcommand("dim-sweep", "Scenario (a) across system dimensions");
    sweep->add_option("--dims", dims, "List of MxK, e.g. 10x7 40x20");
    add_run_flags(sweep, flags);

    auto* sensitivity =
        app.add_subcommand("lambda-sensitivity", "Scenario (b) under the catalog lambda grids");
    add_run_flags(sensitivity, flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (*estimate) {
            const std::vector<double> lambdas = parse_list(est_lambdas, "--lambdas");
            const SnrEstimate e = estimate_from_files(y_path, wbar_path, psi_path, lambdas);
            std::cout << (as_json ? estimate_to_json(e) + "\n" : estimate_to_text(e));
        } else if (*scenario) {
            RunConfig config = build_config(flags, scenario_name);
            config.scenario = scenario_name;
            if (!dump_dir.empty()) {
                const SnrEstimate e = dump_realization(config, dump_dir);
                std::cout << estimate_to_text(e);
            } else {
                emit_scenario(config, run_scenario(config));
            }
        } else if (*theorem) {
            RunConfig config = build_config(flags, "fig1");
            if (draws) config.theorem_draws = draws;
            const TheoremResult r = verify_theorem(config);
            std::ostringstream os;
            write_theorem_csv(os, r, config);
            emit(config, os.str());
        } else if (*sweep) {
            RunConfig config = build_config(flags, "a");
            if (!dims.empty()) config.dims = parse_dims(dims);
            emit_scenario(config, dim_sweep(config));
        } else if (*sensitivity) {
            RunConfig config = build_config(flags, "i");
            emit_scenario(config, lambda_sensitivity(config));
        }
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const IoError& e) {
        std::cerr << "I/O error: " << e.what() << '\n';
        return kExitIo;
    }
    return 0;
}
