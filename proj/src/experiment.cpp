#include "cdas/experiment.hpp"

#include "cdas/errors.hpp"
#include "cdas/grpo_math.hpp"
#include "cdas/serialization.hpp"

#include <algorithm>
#include <fstream>
#include <future>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>
#include <fmt/ostream.h>

namespace cdas {

namespace {

constexpr const char* kCheckpointFormat = "cdas-checkpoint";

BaselineStrategy baseline_of(Strategy s) {
    switch (s) {
        case Strategy::Random: return BaselineStrategy::Random;
        case Strategy::Curriculum: return BaselineStrategy::Curriculum;
        case Strategy::Prioritized: return BaselineStrategy::Prioritized;
        case Strategy::Dynamic: return BaselineStrategy::Dynamic;
        case Strategy::Cdas: break;
    }
    throw ConfigError("CDAS is not a baseline strategy", "strategy");
}

std::vector<ProblemRecord> hidden_copy(const ProblemBank& bank) {
    auto records = bank.problems;
    for (auto& r : records) {
        r.true_difficulty.reset();
    }
    return records;
}

double mean_of(std::span<const double> v) {
    if (v.empty()) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

nlohmann::json nan_safe(double v) {
    return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

void to_json(nlohmann::json& j, const StepMetrics& m) {
    j = nlohmann::json{{"step", m.step},
                       {"mean_reward", m.mean_reward},
                       {"zero_gradient_fraction", m.zero_gradient_fraction},
                       {"rollout_batches_consumed", m.rollout_batches_consumed},
                       {"competence", m.competence},
                       {"mean_sampled_difficulty", m.mean_sampled_difficulty},
                       {"learner_ability", m.learner_ability}};
}

StepMetrics metrics_from_json(const nlohmann::json& j) {
    StepMetrics m;
    m.step = j.at("step").get<std::uint64_t>();
    m.mean_reward = j.at("mean_reward").get<double>();
    m.zero_gradient_fraction = j.at("zero_gradient_fraction").get<double>();
    m.rollout_batches_consumed = j.at("rollout_batches_consumed").get<std::size_t>();
    m.competence = j.at("competence").get<double>();
    m.mean_sampled_difficulty = j.at("mean_sampled_difficulty").get<double>();
    m.learner_ability = j.at("learner_ability").get<double>();
    return m;
}

void write_problems_csv(std::ostream& out, const Experiment& e) {
    out << "id,level_tag,true_difficulty,t,difficulty,last_pass_rate\n";
    const auto& records = e.ledger().records();
    const auto& bank = e.bank().problems;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        const auto& last = e.last_pass_rates()[i];
        fmt::print(out, "{},{},{},{},{},{}\n", to_underlying(r.id),
                   r.level_tag ? fmt::format("{}", *r.level_tag) : std::string{},
                   bank[i].true_difficulty.value_or(0.0), r.t, r.difficulty,
                   last ? fmt::format("{}", *last) : std::string{});
    }
}

void write_outputs(const Experiment& e, const RunResult& result) {
    const std::filesystem::path dir = e.config().out;
    if (dir.empty()) {
        return;
    }
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        throw std::runtime_error(fmt::format("cannot create output directory {}: {}",
                                             dir.string(), ec.message()));
    }
    std::ostringstream csv;
    write_metrics_csv(csv, to_string(e.config().strategy), e.config().seed, result.metrics);
    write_text_file(dir / "metrics.csv", csv.str());
    write_text_file(dir / "summary.json", result.summary.dump(2) + "\n");
    write_text_file(dir / "checkpoint.json", result.checkpoint.dump() + "\n");
    std::ostringstream problems;
    write_problems_csv(problems, e);
    write_text_file(dir / "problems.csv", problems.str());
}

RunResult collect(const Experiment& e) {
    return RunResult{e.config(), e.metrics(), e.summary(), e.checkpoint()};
}

}  // namespace

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error(fmt::format("cannot read {}", path.string()));
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error(fmt::format("cannot write {}", path.string()));
    }
    out << text;
    if (!out) {
        throw std::runtime_error(fmt::format("write to {} failed", path.string()));
    }
}

ProblemBank make_bank(const ExperimentConfig& config) {
    if (config.bank_file) {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(read_text_file(*config.bank_file));
        } catch (const nlohmann::json::parse_error& e) {
            throw ConfigError(fmt::format("{} is not valid JSON: {}", *config.bank_file, e.what()),
                              "bank_file");
        }
        auto bank = ProblemBank::from_json(j);
        if (bank.problems.size() != config.n_problems) {
            throw ConfigError(fmt::format("bank file holds {} problems, config asks for {}",
                                          bank.problems.size(), config.n_problems),
                              "n_problems");
        }
        return bank;
    }
    BankParams params;
    params.n_problems = config.n_problems;
    params.distribution = bank_distribution_from_string(config.bank_distribution);
    params.mean = config.bank_mean;
    params.sd = config.bank_sd;
    params.level_tags = config.level_tags;
    return generate_bank(params, config.effective_bank_seed());
}

Experiment::Experiment(ExperimentConfig config) : Experiment(config, make_bank(config)) {}

Experiment::Experiment(ExperimentConfig config, ProblemBank bank)
    : config_(std::move(config)), bank_(std::move(bank)) {
    validate(config_);
    if (bank_.problems.size() != config_.n_problems) {
        throw ConfigError("bank size does not match n_problems", "n_problems");
    }
    LearnerParams lp;
    lp.discrimination = config_.discrimination;
    lp.learn_rate = config_.learn_rate;
    lp.rollouts = config_.rollouts;
    lp.initial_ability = config_.initial_ability;
    learner_ = make_learner(lp, bank_, config_.seed);
    init_sampler();
    shadow_ = DifficultyLedger(hidden_copy(bank_), config_.initial_difficulty);
    last_pass_rate_.assign(bank_.problems.size(), std::nullopt);
}

void Experiment::init_sampler() {
    auto records = hidden_copy(bank_);
    if (config_.strategy == Strategy::Cdas) {
        CdasOptions opts;
        opts.symmetric = config_.symmetric;
        opts.warmup = config_.warmup;
        opts.initial_difficulty = config_.initial_difficulty;
        sampler_.emplace<CdasSampler>(std::move(records), config_.batch_size, opts, config_.seed);
    } else {
        BaselineOptions opts;
        opts.curriculum_switch_step = config_.effective_switch_step();
        opts.curriculum_threshold = config_.curriculum_threshold;
        opts.prioritized_initial_weight = config_.prioritized_initial_weight;
        opts.dynamic_retry_cap = config_.dynamic_retry_cap;
        sampler_.emplace<BaselineSampler>(std::move(records), baseline_of(config_.strategy), opts,
                                          config_.seed);
    }
    bank_index_.clear();
    std::uint32_t max_id = 0;
    for (const auto& p : bank_.problems) {
        max_id = std::max(max_id, to_underlying(p.id));
    }
    bank_index_.assign(static_cast<std::size_t>(max_id) + 1, std::numeric_limits<std::size_t>::max());
    for (std::size_t i = 0; i < bank_.problems.size(); ++i) {
        bank_index_[to_underlying(bank_.problems[i].id)] = i;
    }
}

std::size_t Experiment::bank_index(ProblemId id) const {
    const auto raw = to_underlying(id);
    if (raw >= bank_index_.size() || bank_index_[raw] == std::numeric_limits<std::size_t>::max()) {
        throw ConsistencyError(fmt::format("problem id {} is not in the bank", raw));
    }
    return bank_index_[raw];
}

const DifficultyLedger& Experiment::ledger() const noexcept {
    if (const auto* c = cdas()) {
        return c->ledger();
    }
    return shadow_;
}

const StepMetrics& Experiment::step() {
    if (finished()) {
        throw std::logic_error("experiment already finished");
    }
    const std::uint64_t n = metrics_.size() + 1;
    const std::size_t batch_size = config_.batch_size;
    bank_zero_gradient_.push_back(bank_zero_gradient_fraction(learner_, bank_));

    std::vector<ProblemId> batch;
    std::vector<RolloutResult> rollouts;
    std::size_t consumed = 0;

    if (auto* c = std::get_if<CdasSampler>(&sampler_)) {
        batch = c->select_batch(batch_size);
    } else {
        auto& b = std::get<BaselineSampler>(sampler_);
        if (b.strategy() == BaselineStrategy::Dynamic) {
            std::vector<RolloutResult> all;
            auto fn = [&](ProblemId id) {
                all.push_back(rollout(learner_, bank_.problems[bank_index(id)], n));
                return all.back().observation;
            };
            auto sel = b.dynamic_select_and_filter(batch_size, fn);
            batch = std::move(sel.ids);
            consumed = sel.total_rollout_batches;
            for (auto id : batch) {
                auto it = std::find_if(all.begin(), all.end(), [&](const RolloutResult& r) {
                    return r.observation.problem_id == id;
                });
                rollouts.push_back(*it);
            }
        } else {
            batch = b.select_batch(batch_size);
        }
    }

    if (rollouts.empty()) {
        rollouts.reserve(batch.size());
        for (auto id : batch) {
            rollouts.push_back(rollout(learner_, bank_.problems[bank_index(id)], n));
        }
        consumed = batch.size();
    }

    const DifficultyLedger& before = ledger();
    double sampled_difficulty = 0.0;
    for (auto id : batch) {
        sampled_difficulty += before.record(id).difficulty;
    }
    sampled_difficulty /= static_cast<double>(batch.size());

    std::vector<PassRateObservation> observations;
    std::vector<GroupOutcome> groups;
    std::vector<BatchOutcome> learn_batch;
    for (const auto& r : rollouts) {
        const auto adv = group_advantages(r.group);
        observations.push_back(r.observation);
        groups.push_back({r.observation.problem_id, r.observation.pass_rate, adv.zero_gradient});
        learn_batch.push_back({r.observation.pass_rate, adv.zero_gradient});
        last_pass_rate_[bank_index(r.observation.problem_id)] = r.observation.pass_rate;
    }

    if (auto* c = std::get_if<CdasSampler>(&sampler_)) {
        c->report_outcomes(observations);
    } else {
        std::get<BaselineSampler>(sampler_).report_outcomes(observations);
        shadow_.observe(observations);
    }
    learn_step(learner_, learn_batch);

    StepContext ctx;
    ctx.step = n;
    ctx.rollout_batches_consumed = consumed;
    ctx.competence = ledger().competence();
    ctx.mean_sampled_difficulty = sampled_difficulty;
    ctx.learner_ability = learner_.ability;
    metrics_.push_back(summarize_step(groups, ctx));
    last_batch_ = std::move(batch);
    last_groups_ = std::move(groups);
    return metrics_.back();
}

void Experiment::run_until(std::uint64_t step) {
    step = std::min(step, config_.total_steps);
    while (metrics_.size() < step) {
        this->step();
    }
}

std::vector<DifficultyRow> Experiment::difficulty_table() const {
    return difficulty_passrate_table(ledger().records(), last_pass_rate_);
}

nlohmann::json Experiment::summary() const {
    const std::uint64_t cutoff = config_.epoch_steps();
    std::vector<double> post_warmup_zero;
    std::vector<double> all_zero;
    std::size_t cumulative = 0;
    for (const auto& m : metrics_) {
        all_zero.push_back(m.zero_gradient_fraction);
        if (m.step > cutoff) {
            post_warmup_zero.push_back(m.zero_gradient_fraction);
        }
        cumulative += m.rollout_batches_consumed;
    }
    const auto table = difficulty_table();
    std::vector<double> d;
    std::vector<double> s;
    for (const auto& row : table) {
        d.push_back(row.difficulty);
        s.push_back(row.final_pass_rate);
    }

    nlohmann::json j{
        {"strategy", to_string(config_.strategy)},
        {"seed", config_.seed},
        {"bank_seed", config_.effective_bank_seed()},
        {"bank_hash", fmt::format("{:016x}", bank_.hash())},
        {"config_hash", config_hash(config_)},
        {"steps", metrics_.size()},
        {"epoch_steps", cutoff},
        {"final_ability", learner_.ability},
        {"final_competence", ledger().competence()},
        {"mean_zero_gradient_fraction", nan_safe(mean_of(all_zero))},
        {"post_warmup_zero_gradient_fraction", nan_safe(mean_of(post_warmup_zero))},
        {"cumulative_rollout_batches", cumulative},
        {"mean_bank_zero_gradient_fraction", nan_safe(mean_of(bank_zero_gradient_))},
        {"difficulty_passrate_spearman", nan_safe(spearman(d, s))},
        {"sampled_problems", table.size()},
    };
    if (const auto* b = baseline()) {
        j["uniform_fallbacks"] = b->uniform_fallbacks();
    }
    if (const auto* c = cdas()) {
        j["warmup_steps"] = c->warmup_steps();
    }
    return j;
}

nlohmann::json Experiment::checkpoint() const {
    nlohmann::json sampler;
    if (const auto* c = cdas()) {
        sampler = c->snapshot();
    } else if (const auto* b = baseline()) {
        sampler = b->snapshot();
    }
    nlohmann::json metrics = nlohmann::json::array();
    for (const auto& m : metrics_) {
        nlohmann::json row;
        to_json(row, m);
        metrics.push_back(std::move(row));
    }
    nlohmann::json last = nlohmann::json::array();
    for (const auto& v : last_pass_rate_) {
        last.push_back(v ? nlohmann::json(*v) : nlohmann::json(nullptr));
    }
    return nlohmann::json{
        {"format", kCheckpointFormat},
        {"version", kCheckpointVersion},
        {"config", to_json(config_)},
        {"config_hash", config_hash(config_)},
        {"step", metrics_.size()},
        {"bank", bank_.to_json()},
        {"bank_hash", fmt::format("{:016x}", bank_.hash())},
        {"sampler", std::move(sampler)},
        {"learner", learner_.snapshot()},
        {"shadow", {{"records", shadow_.records()}, {"competence", shadow_.competence_state()}}},
        {"last_pass_rate", std::move(last)},
        {"bank_zero_gradient", bank_zero_gradient_},
        {"metrics", std::move(metrics)},
    };
}

Experiment Experiment::resume(const nlohmann::json& cp) {
    try {
        if (cp.value("format", std::string{}) != kCheckpointFormat) {
            throw CheckpointError("not a checkpoint file");
        }
        const int version = cp.at("version").get<int>();
        if (version != kCheckpointVersion) {
            throw CheckpointError(fmt::format(
                "checkpoint version {} is not supported (expected {})", version, kCheckpointVersion));
        }
        Experiment e;
        e.config_ = config_from_json(cp.at("config"));
        const auto stored_hash = cp.at("config_hash").get<std::string>();
        if (config_hash(e.config_) != stored_hash) {
            throw CheckpointError(fmt::format(
                "config hash mismatch: checkpoint records {}, its config hashes to {}; refusing to "
                "resume a modified run",
                stored_hash, config_hash(e.config_)));
        }
        validate(e.config_);
        e.bank_ = ProblemBank::from_json(cp.at("bank"));
        if (fmt::format("{:016x}", e.bank_.hash()) != cp.at("bank_hash").get<std::string>()) {
            throw CheckpointError("bank hash mismatch; refusing to resume");
        }
        e.init_sampler();
        const auto& sampler = cp.at("sampler");
        if (e.config_.strategy == Strategy::Cdas) {
            e.sampler_ = CdasSampler::restore(sampler);
        } else {
            e.sampler_ = BaselineSampler::restore(sampler);
        }
        e.learner_ = LearnerState::restore(cp.at("learner"));
        e.shadow_ = DifficultyLedger::restore(
            cp.at("shadow").at("records").get<std::vector<ProblemRecord>>(),
            cp.at("shadow").at("competence").get<CompetenceState>());
        for (const auto& v : cp.at("last_pass_rate")) {
            e.last_pass_rate_.push_back(v.is_null() ? std::nullopt
                                                    : std::optional<double>(v.get<double>()));
        }
        e.bank_zero_gradient_ = cp.at("bank_zero_gradient").get<std::vector<double>>();
        for (const auto& row : cp.at("metrics")) {
            e.metrics_.push_back(metrics_from_json(row));
        }
        if (e.metrics_.size() != cp.at("step").get<std::size_t>() ||
            e.last_pass_rate_.size() != e.bank_.problems.size()) {
            throw CheckpointError("checkpoint is internally inconsistent");
        }
        return e;
    } catch (const nlohmann::json::exception& ex) {
        throw CheckpointError(fmt::format("malformed checkpoint: {}", ex.what()));
    }
}

RunResult run(const ExperimentConfig& config, std::optional<std::uint64_t> stop_at) {
    Experiment e(config);
    e.run_until(stop_at.value_or(config.total_steps));
    auto result = collect(e);
    write_outputs(e, result);
    return result;
}

ResumeResult resume(const nlohmann::json& checkpoint, const std::string& out_dir) {
    Experiment e = Experiment::resume(checkpoint);
    if (!out_dir.empty()) {
        e.set_output_dir(out_dir);
    }
    ResumeResult r;
    r.already_complete = e.finished();
    e.run_to_end();
    r.result = collect(e);
    write_outputs(e, r.result);
    return r;
}

std::vector<RunResult> compare(std::span<const ExperimentConfig> configs) {
    if (configs.empty()) {
        return {};
    }
    auto comparable = [](const ExperimentConfig& c) {
        auto j = to_json(c);
        j.erase("strategy");
        j.erase("out");
        return j;
    };
    const auto& first = configs.front();
    for (const auto& c : configs) {
        if (c.effective_bank_seed() != first.effective_bank_seed()) {
            throw ConfigError(fmt::format("bank seeds differ ({} vs {})", c.effective_bank_seed(),
                                          first.effective_bank_seed()),
                              "bank_seed");
        }
        if (comparable(c) != comparable(first)) {
            throw ConfigError("compared configurations must differ only in strategy", "strategy");
        }
        validate(c);
    }
    const ProblemBank bank = make_bank(first);

    std::vector<std::future<RunResult>> jobs;
    jobs.reserve(configs.size());
    for (const auto& c : configs) {
        jobs.push_back(std::async(std::launch::async, [&bank, c] {
            Experiment e(c, bank);
            e.run_to_end();
            auto result = collect(e);
            write_outputs(e, result);
            return result;
        }));
    }
    std::vector<RunResult> results;
    results.reserve(jobs.size());
    for (auto& j : jobs) {
        results.push_back(j.get());
    }
    return results;
}

std::vector<RunResult> sweep(const ExperimentConfig& base, std::span<const Strategy> strategies,
                             std::span<const std::uint64_t> seeds) {
    std::vector<RunResult> all;
    for (auto seed : seeds) {
        std::vector<ExperimentConfig> configs;
        for (auto s : strategies) {
            ExperimentConfig c = base;
            c.seed = seed;
            c.bank_seed = base.bank_seed ? base.bank_seed : std::optional<std::uint64_t>(seed);
            c.strategy = s;
            if (!base.out.empty()) {
                c.out = (std::filesystem::path(base.out) /
                         fmt::format("{}_seed{}", to_string(s), seed))
                            .string();
            }
            configs.push_back(std::move(c));
        }
        auto results = compare(configs);
        std::move(results.begin(), results.end(), std::back_inserter(all));
    }
    return all;
}

void write_comparison_csv(const std::filesystem::path& path, std::span<const RunResult> runs) {
    std::ostringstream out;
    out << kMetricsCsvHeader << '\n';
    for (const auto& r : runs) {
        for (const auto& m : r.metrics) {
            write_metrics_row(out, to_string(r.config.strategy), r.config.seed, m);
        }
    }
    write_text_file(path, out.str());
}

void write_summary_csv(const std::filesystem::path& path, std::span<const RunResult> runs) {
    std::ostringstream out;
    out << "strategy,seed,bank_hash,final_ability,post_warmup_zero_gradient_fraction,"
           "cumulative_rollout_batches,mean_bank_zero_gradient_fraction\n";
    auto num = [](const nlohmann::json& v) {
        return v.is_null() ? std::string{} : fmt::format("{}", v.get<double>());
    };
    for (const auto& r : runs) {
        const auto& s = r.summary;
        fmt::print(out, "{},{},{},{},{},{},{}\n", s.at("strategy").get<std::string>(),
                   s.at("seed").get<std::uint64_t>(), s.at("bank_hash").get<std::string>(),
                   num(s.at("final_ability")), num(s.at("post_warmup_zero_gradient_fraction")),
                   s.at("cumulative_rollout_batches").get<std::size_t>(),
                   num(s.at("mean_bank_zero_gradient_fraction")));
    }
    write_text_file(path, out.str());
}

}  // namespace cdas
