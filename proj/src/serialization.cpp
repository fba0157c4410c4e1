#include "cdas/serialization.hpp"

namespace cdas {

void to_json(nlohmann::json& j, const ProblemId& id) {
    j = to_underlying(id);
}

void from_json(const nlohmann::json& j, ProblemId& id) {
    id = ProblemId{j.get<std::uint32_t>()};
}

void to_json(nlohmann::json& j, const ProblemRecord& r) {
    j = nlohmann::json{{"id", r.id}, {"t", r.t}, {"difficulty", r.difficulty}};
    j["level_tag"] = r.level_tag ? nlohmann::json(*r.level_tag) : nlohmann::json(nullptr);
    j["true_difficulty"] =
        r.true_difficulty ? nlohmann::json(*r.true_difficulty) : nlohmann::json(nullptr);
}

void from_json(const nlohmann::json& j, ProblemRecord& r) {
    r.id = j.at("id").get<ProblemId>();
    r.t = j.at("t").get<std::uint64_t>();
    r.difficulty = j.at("difficulty").get<double>();
    r.level_tag.reset();
    r.true_difficulty.reset();
    if (auto it = j.find("level_tag"); it != j.end() && !it->is_null()) {
        r.level_tag = it->get<int>();
    }
    if (auto it = j.find("true_difficulty"); it != j.end() && !it->is_null()) {
        r.true_difficulty = it->get<double>();
    }
}

void to_json(nlohmann::json& j, const CompetenceState& c) {
    j = nlohmann::json{{"competence", c.competence}, {"step", c.step}};
}

void from_json(const nlohmann::json& j, CompetenceState& c) {
    c.competence = j.at("competence").get<double>();
    c.step = j.at("step").get<std::uint64_t>();
}

void to_json(nlohmann::json& j, const PassRateObservation& o) {
    j = nlohmann::json{{"problem_id", o.problem_id}, {"pass_rate", o.pass_rate}, {"step", o.step}};
}

void from_json(const nlohmann::json& j, PassRateObservation& o) {
    o.problem_id = j.at("problem_id").get<ProblemId>();
    o.pass_rate = j.at("pass_rate").get<double>();
    o.step = j.at("step").get<std::uint64_t>();
}

}  // namespace cdas
