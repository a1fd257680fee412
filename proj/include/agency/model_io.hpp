#pragma once

#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "agency/errors.hpp"
#include "agency/models.hpp"

namespace agency {

using LoadedModel = std::variant<MDPModel, POMDPModel>;

namespace detail {

inline nlohmann::json mdp_to_json(const MDPModel& m) {
    nlohmann::json j;
    j["format_version"] = 1;
    j["kind"] = "mdp";
    j["states"] = m.states;
    j["actions"] = m.actions;
    j["transition"] = m.transition;
    j["reward"] = m.reward;
    j["horizon"] = m.horizon;
    return j;
}

inline nlohmann::json pomdp_to_json(const POMDPModel& p) {
    nlohmann::json j = mdp_to_json(p.base);
    j["kind"] = "pomdp";
    j["observations"] = p.observations;
    j["likelihood"] = p.likelihood;
    return j;
}

template <typename T>
T field_as(const nlohmann::json& j, const std::string& key) {
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("field '" + key + "': " + e.what());
    }
}

}  // namespace detail

inline void save_model(const MDPModel& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << detail::mdp_to_json(m).dump(2) << "\n";
}

inline void save_model(const POMDPModel& p, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << detail::pomdp_to_json(p).dump(2) << "\n";
}

inline void save_model(const LoadedModel& m, const std::string& path) {
    std::visit([&](const auto& model) { save_model(model, path); }, m);
}

/// Parses and fully re-validates a model file. Unknown keys are rejected
/// (ParseError); invariant violations surface as ValidationError carrying the
/// validate_model report. The optional key `gamma` is accepted but must be
/// exactly 1.
inline LoadedModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path + " for reading");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path + ": " + e.what());
    }
    if (!j.is_object()) throw ParseError(path + ": top level must be an object");

    const int version = detail::field_as<int>(j, "format_version");
    if (version != 1)
        throw ParseError(path + ": unsupported format_version " + std::to_string(version));
    const std::string kind = detail::field_as<std::string>(j, "kind");
    if (kind != "mdp" && kind != "pomdp")
        throw ParseError(path + ": kind must be \"mdp\" or \"pomdp\", got \"" + kind + "\"");

    std::set<std::string> allowed = {"format_version", "kind",    "states", "actions",
                                     "transition",     "reward",  "horizon", "gamma"};
    if (kind == "pomdp") {
        allowed.insert("observations");
        allowed.insert("likelihood");
    }
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key()))
            throw ParseError(path + ": unknown key '" + it.key() + "' for kind " + kind);

    MDPModel m;
    m.states = detail::field_as<std::vector<std::string>>(j, "states");
    m.actions = detail::field_as<std::vector<std::string>>(j, "actions");
    m.transition = detail::field_as<std::vector<std::vector<std::vector<double>>>>(j, "transition");
    m.reward = detail::field_as<std::vector<double>>(j, "reward");
    m.horizon = detail::field_as<int>(j, "horizon");
    if (j.contains("gamma")) m.discount = detail::field_as<double>(j, "gamma");

    if (kind == "mdp") {
        require_valid(m);
        return m;
    }
    POMDPModel p;
    p.base = std::move(m);
    p.observations = detail::field_as<std::vector<std::string>>(j, "observations");
    p.likelihood = detail::field_as<std::vector<std::vector<double>>>(j, "likelihood");
    require_valid(p);
    return p;
}

}  // namespace agency
