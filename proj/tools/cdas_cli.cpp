// cdas: run, compare and resume sampling experiments; solve the equilibrium
// map; generate and inspect problem banks.

#include "cdas/errors.hpp"
#include "cdas/experiment.hpp"
#include "cdas/fixed_point.hpp"
#include "cdas/sim_learner.hpp"

#include <CLI11.hpp>
#include <fmt/core.h>
#include <nlohmann/json.hpp>

#include <array>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace cdas;

namespace {

enum class Kind { Int, Real, Text, Bool };

struct Field {
    const char* name;
    Kind kind;
    const char* extra_names = "";
};

// Every ExperimentConfig field is settable from the command line under its
// own name; dashed spellings are accepted too.
constexpr std::array kFields{
    Field{"n_problems", Kind::Int},
    Field{"batch_size", Kind::Int},
    Field{"rollouts", Kind::Int},
    Field{"total_steps", Kind::Int, ",--steps"},
    Field{"strategy", Kind::Text},
    Field{"symmetric", Kind::Bool},
    Field{"warmup", Kind::Bool},
    Field{"seed", Kind::Int},
    Field{"bank_seed", Kind::Int},
    Field{"bank_distribution", Kind::Text},
    Field{"bank_mean", Kind::Real},
    Field{"bank_sd", Kind::Real},
    Field{"level_tags", Kind::Bool},
    Field{"bank_file", Kind::Text},
    Field{"discrimination", Kind::Real},
    Field{"learn_rate", Kind::Real},
    Field{"initial_ability", Kind::Real},
    Field{"initial_difficulty", Kind::Real},
    Field{"curriculum_switch_step", Kind::Int},
    Field{"curriculum_threshold", Kind::Int},
    Field{"dynamic_retry_cap", Kind::Int},
    Field{"prioritized_initial_weight", Kind::Real},
    Field{"out", Kind::Text},
};

std::string dashed(std::string s) {
    for (auto& ch : s) {
        if (ch == '_') {
            ch = '-';
        }
    }
    return s;
}

nlohmann::json parse_number(const std::string& field, const std::string& text, Kind kind) {
    try {
        std::size_t used = 0;
        if (kind == Kind::Int) {
            if (text.empty() || text.front() == '-') {
                throw std::invalid_argument("negative");
            }
            const auto v = std::stoull(text, &used);
            if (used == text.size()) {
                return v;
            }
        } else {
            const auto v = std::stod(text, &used);
            if (used == text.size()) {
                return v;
            }
        }
    } catch (const std::exception&) {
    }
    throw ConfigError(fmt::format("'{}' is not a valid value", text), field);
}

struct ConfigFlags {
    std::string config_path;
    nlohmann::json overrides = nlohmann::json::object();

    void attach(CLI::App* app) {
        app->add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
        for (const auto& f : kFields) {
            const std::string name = f.name;
            std::string names = "--" + name;
            if (dashed(name) != name) {
                names += ",--" + dashed(name);
            }
            names += f.extra_names;
            if (f.kind == Kind::Bool) {
                app->add_flag_function(
                    names + ",!--no-" + dashed(name),
                    [this, name](std::int64_t count) { overrides[name] = count > 0; },
                    "toggle " + name)
                    ->disable_flag_override();
                continue;
            }
            const Kind kind = f.kind;
            app->add_option_function<std::string>(
                names,
                [this, name, kind](const std::string& v) {
                    overrides[name] = kind == Kind::Text ? nlohmann::json(v)
                                                         : parse_number(name, v, kind);
                },
                name);
        }
    }

    ExperimentConfig resolve() const {
        ExperimentConfig base = config_path.empty() ? ExperimentConfig{} : load_config(config_path);
        return config_from_json(overrides, base);
    }
};

void print_json(const nlohmann::json& j) { std::cout << j.dump(2) << '\n'; }

std::vector<double> read_vector(const std::string& path) {
    const std::string text = read_text_file(path);
    const auto first = text.find_first_not_of(" \t\r\n");
    std::vector<double> values;
    if (first != std::string::npos && text[first] == '[') {
        try {
            return nlohmann::json::parse(text).get<std::vector<double>>();
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(e.what(), "s_star");
        }
    }
    std::string cleaned = text;
    for (auto& ch : cleaned) {
        if (ch == ',') {
            ch = ' ';
        }
    }
    std::istringstream in(cleaned);
    std::string token;
    while (in >> token) {
        values.push_back(parse_number("s_star", token, Kind::Real).get<double>());
    }
    if (values.empty()) {
        throw ConfigError("no values in " + path, "s_star");
    }
    return values;
}

std::vector<std::string> split(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream in(s);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (!item.empty()) {
            out.push_back(item);
        }
    }
    return out;
}

int cmd_run(const ConfigFlags& flags, std::optional<std::uint64_t> stop_at) {
    const auto config = flags.resolve();
    validate(config);
    auto result = run(config, stop_at);
    print_json(result.summary);
    return 0;
}

// Summaries store undefined statistics (e.g. no post-warm-up steps) as null.
double number_or_nan(const nlohmann::json& v) {
    return v.is_number() ? v.get<double>() : std::nan("");
}

int cmd_compare(const ConfigFlags& flags, const std::string& strategies_arg,
                const std::string& seeds_arg) {
    const auto base = flags.resolve();
    std::vector<Strategy> strategies;
    for (const auto& s : split(strategies_arg)) {
        strategies.push_back(strategy_from_string(s));
    }
    std::vector<std::uint64_t> seeds;
    for (const auto& s : split(seeds_arg)) {
        seeds.push_back(parse_number("seeds", s, Kind::Int).get<std::uint64_t>());
    }
    if (strategies.empty() || seeds.empty()) {
        throw ConfigError("need at least one strategy and one seed", "strategies");
    }
    auto runs = sweep(base, strategies, seeds);
    if (!base.out.empty()) {
        write_comparison_csv(std::filesystem::path(base.out) / "comparison.csv", runs);
        write_summary_csv(std::filesystem::path(base.out) / "summary.csv", runs);
    }
    fmt::print("{:<12} {:>5} {:>10} {:>14} {:>12}\n", "strategy", "seed", "ability",
               "post-warmup zg", "rollouts");
    for (const auto& r : runs) {
        const auto& s = r.summary;
        fmt::print("{:<12} {:>5} {:>10.4f} {:>14.4f} {:>12}\n", s.at("strategy").get<std::string>(),
                   s.at("seed").get<std::uint64_t>(), s.at("final_ability").get<double>(),
                   number_or_nan(s.at("post_warmup_zero_gradient_fraction")),
                   s.at("cumulative_rollout_batches").get<std::size_t>());
    }
    return 0;
}

int cmd_resume(const std::string& checkpoint_path, const std::string& out) {
    nlohmann::json cp;
    try {
        cp = nlohmann::json::parse(read_text_file(checkpoint_path));
    } catch (const nlohmann::json::exception& e) {
        throw CheckpointError(fmt::format("{}: {}", checkpoint_path, e.what()));
    }
    auto r = resume(cp, out);
    if (r.already_complete) {
        std::cerr << "run already complete; nothing to do\n";
    }
    print_json(r.result.summary);
    return 0;
}

int cmd_fixed_point(const std::string& path, double tolerance, std::size_t max_iters,
                    double init_d, double init_c, const std::string& trajectory) {
    EquilibriumProblem p;
    p.s_star = read_vector(path);
    p.init_d.assign(p.s_star.size(), init_d);
    p.init_c = init_c;
    const auto sol = solve(p, tolerance, max_iters);
    if (!trajectory.empty()) {
        std::ofstream out(trajectory);
        if (!out) {
            throw std::runtime_error("cannot write " + trajectory);
        }
        write_trajectory_csv(out, sol);
    }
    double max_ratio = 0.0;
    for (double r : sol.contraction_ratios) {
        max_ratio = std::max(max_ratio, r);
    }
    print_json({{"d_star", sol.d_star},
                {"c_star", sol.c_star},
                {"iterations", sol.iterations},
                {"final_delta", sol.final_residual},
                {"max_contraction_ratio", max_ratio},
                {"residual", equilibrium_residual(sol.d_star, sol.c_star, p.s_star)}});
    return 0;
}

nlohmann::json describe_bank(const ProblemBank& bank) {
    double sum = 0.0;
    double sq = 0.0;
    std::array<std::size_t, 6> levels{};
    std::size_t untagged = 0;
    for (const auto& p : bank.problems) {
        const double b = p.true_difficulty.value_or(0.0);
        sum += b;
        sq += b * b;
        if (p.level_tag) {
            ++levels[static_cast<std::size_t>(*p.level_tag)];
        } else {
            ++untagged;
        }
    }
    const double n = static_cast<double>(bank.problems.size());
    const double mean = n > 0 ? sum / n : 0.0;
    nlohmann::json level_counts = nlohmann::json::object();
    for (int l = 1; l <= 5; ++l) {
        level_counts[std::to_string(l)] = levels[static_cast<std::size_t>(l)];
    }
    return {{"n_problems", bank.problems.size()},
            {"seed", bank.seed},
            {"distribution", to_string(bank.params.distribution)},
            {"hash", fmt::format("{:016x}", bank.hash())},
            {"difficulty_mean", mean},
            {"difficulty_sd", n > 0 ? std::sqrt(std::max(0.0, sq / n - mean * mean)) : 0.0},
            {"levels", level_counts},
            {"untagged", untagged}};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Competence-difficulty alignment sampling experiments"};
    app.require_subcommand(1);

    ConfigFlags run_flags;
    std::optional<std::uint64_t> stop_at;
    auto* run_cmd = app.add_subcommand("run", "run one strategy and write its outputs");
    run_flags.attach(run_cmd);
    run_cmd->add_option("--stop-at,--stop_at", stop_at, "stop after this step (checkpoint left behind)");

    ConfigFlags compare_flags;
    std::string strategies = "cdas,random,curriculum,prioritized,dynamic";
    std::string seeds = "0";
    auto* compare_cmd = app.add_subcommand("compare", "run several strategies on one bank per seed");
    compare_flags.attach(compare_cmd);
    compare_cmd->add_option("--strategies", strategies, "comma-separated strategies")->capture_default_str();
    compare_cmd->add_option("--seeds", seeds, "comma-separated seeds")->capture_default_str();

    std::string checkpoint;
    std::string resume_out;
    auto* resume_cmd = app.add_subcommand("resume", "continue a checkpointed run");
    resume_cmd->add_option("checkpoint,--checkpoint", checkpoint, "checkpoint.json")->required();
    resume_cmd->add_option("--out", resume_out, "output directory (default: the run's own)");

    std::string s_star_path;
    double tolerance = kDefaultFixedPointTolerance;
    std::size_t max_iters = kDefaultFixedPointMaxIters;
    double init_d = 0.0;
    double init_c = 0.0;
    std::string trajectory;
    auto* fp_cmd = app.add_subcommand("fixed-point", "solve the equilibrium for converged pass rates");
    fp_cmd->add_option("s_star", s_star_path, "file of pass rates (JSON array or whitespace/comma separated)")
        ->required()
        ->check(CLI::ExistingFile);
    fp_cmd->add_option("--tolerance", tolerance, "stop when the sup-norm step drops to this")->capture_default_str();
    fp_cmd->add_option("--max-iters,--max_iters", max_iters, "iteration budget")->capture_default_str();
    fp_cmd->add_option("--init-d,--init_d", init_d, "initial difficulty for every problem")->capture_default_str();
    fp_cmd->add_option("--init-c,--init_c", init_c, "initial competence")->capture_default_str();
    fp_cmd->add_option("--trajectory", trajectory, "write iteration,delta,ratio CSV here");

    auto* bank_cmd = app.add_subcommand("bank", "generate or inspect problem banks");
    bank_cmd->require_subcommand(1);
    BankParams bank_params;
    std::string distribution = "normal";
    std::uint64_t bank_seed = 0;
    bool no_level_tags = false;
    std::string bank_out;
    auto* gen_cmd = bank_cmd->add_subcommand("generate", "write a bank as JSON");
    gen_cmd->add_option("--n-problems,--n_problems", bank_params.n_problems, "bank size")->capture_default_str();
    gen_cmd->add_option("--distribution", distribution, "normal or levels")->capture_default_str();
    gen_cmd->add_option("--mean", bank_params.mean, "difficulty mean")->capture_default_str();
    gen_cmd->add_option("--sd", bank_params.sd, "difficulty spread")->capture_default_str();
    gen_cmd->add_option("--seed", bank_seed, "bank seed")->capture_default_str();
    gen_cmd->add_flag("--no-level-tags", no_level_tags, "omit level tags");
    gen_cmd->add_option("--out", bank_out, "output file (stdout when omitted)");
    std::string inspect_path;
    auto* inspect_cmd = bank_cmd->add_subcommand("inspect", "summarize a bank file");
    inspect_cmd->add_option("bank", inspect_path, "bank JSON")->required()->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }

    try {
        if (*run_cmd) {
            return cmd_run(run_flags, stop_at);
        }
        if (*compare_cmd) {
            return cmd_compare(compare_flags, strategies, seeds);
        }
        if (*resume_cmd) {
            return cmd_resume(checkpoint, resume_out);
        }
        if (*fp_cmd) {
            return cmd_fixed_point(s_star_path, tolerance, max_iters, init_d, init_c, trajectory);
        }
        if (*gen_cmd) {
            bank_params.distribution = bank_distribution_from_string(distribution);
            bank_params.level_tags = !no_level_tags;
            const auto bank = generate_bank(bank_params, bank_seed);
            if (bank_out.empty()) {
                std::cout << bank.to_json().dump() << '\n';
            } else {
                write_text_file(bank_out, bank.to_json().dump());
                print_json(describe_bank(bank));
            }
            return 0;
        }
        if (*inspect_cmd) {
            ProblemBank bank;
            try {
                bank = ProblemBank::from_json(nlohmann::json::parse(read_text_file(inspect_path)));
            } catch (const nlohmann::json::exception& e) {
                throw ConfigError(e.what(), "bank");
            }
            print_json(describe_bank(bank));
            return 0;
        }
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const CheckpointError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const DomainError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const ConvergenceError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
