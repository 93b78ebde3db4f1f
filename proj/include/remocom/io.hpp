#pragma once

#include "remocom/belief.hpp"
#include "remocom/model.hpp"
#include "remocom/util.hpp"

#include <json.hpp>

#include <fstream>
#include <stdexcept>
#include <string>

namespace remocom {

using Json = nlohmann::ordered_json;

inline constexpr int kFormatVersion = 1;
inline constexpr const char* kLibraryVersion = "0.1.0";

inline Json mdp_to_json(const ControlledMarkovProcess& mdp) {
    Json j;
    j["format_version"] = kFormatVersion;
    j["n_states"] = mdp.n_states;
    j["n_actions"] = mdp.n_actions;
    j["gamma"] = mdp.gamma;
    Json xi = Json::array();
    for (int s = 0; s < mdp.n_states; ++s) xi.push_back(mdp.initial_dist(s));
    j["initial_dist"] = std::move(xi);
    Json trans = Json::array();
    for (int a = 0; a < mdp.n_actions; ++a) {
        Json rows = Json::array();
        for (int s = 0; s < mdp.n_states; ++s) {
            Json row = Json::array();
            for (int t = 0; t < mdp.n_states; ++t) row.push_back(mdp.P(a)(s, t));
            rows.push_back(std::move(row));
        }
        trans.push_back(std::move(rows));
    }
    j["transitions"] = std::move(trans);
    Json rew = Json::array();  // flattened (s, a, s')
    for (int s = 0; s < mdp.n_states; ++s)
        for (int a = 0; a < mdp.n_actions; ++a)
            for (int t = 0; t < mdp.n_states; ++t) rew.push_back(mdp.R(a)(s, t));
    j["reward"] = std::move(rew);
    j["metadata"] = {{"seed", mdp.metadata.seed},
                     {"d", mdp.metadata.density},
                     {"family", mdp.metadata.family}};
    return j;
}

/// Canonical text form; equal models serialize to identical bytes.
inline std::string serialize_mdp(const ControlledMarkovProcess& mdp) {
    return mdp_to_json(mdp).dump(2) + "\n";
}

inline ControlledMarkovProcess mdp_from_json(const Json& j) {
    ControlledMarkovProcess mdp;
    try {
        mdp.n_states = j.at("n_states").get<int>();
        mdp.n_actions = j.at("n_actions").get<int>();
        mdp.gamma = j.at("gamma").get<double>();
        const auto& xi = j.at("initial_dist");
        mdp.initial_dist = Eigen::VectorXd::Zero(mdp.n_states);
        for (int s = 0; s < mdp.n_states; ++s) mdp.initial_dist(s) = xi.at(s).get<double>();
        const auto& trans = j.at("transitions");
        for (int a = 0; a < mdp.n_actions; ++a) {
            Eigen::MatrixXd P(mdp.n_states, mdp.n_states);
            for (int s = 0; s < mdp.n_states; ++s)
                for (int t = 0; t < mdp.n_states; ++t)
                    P(s, t) = trans.at(a).at(s).at(t).get<double>();
            mdp.transitions.push_back(std::move(P));
        }
        const auto& rew = j.at("reward");
        if (rew.size() != static_cast<size_t>(mdp.n_states) * mdp.n_actions * mdp.n_states)
            throw std::invalid_argument("reward length mismatch");
        mdp.reward.assign(static_cast<size_t>(mdp.n_actions),
                          Eigen::MatrixXd::Zero(mdp.n_states, mdp.n_states));
        size_t i = 0;
        for (int s = 0; s < mdp.n_states; ++s)
            for (int a = 0; a < mdp.n_actions; ++a)
                for (int t = 0; t < mdp.n_states; ++t)
                    mdp.reward[static_cast<size_t>(a)](s, t) = rew.at(i++).get<double>();
        if (j.contains("metadata")) {
            const auto& m = j.at("metadata");
            mdp.metadata.seed = m.value("seed", std::uint64_t{0});
            mdp.metadata.density = m.value("d", 0.0);
            mdp.metadata.family = m.value("family", std::string{});
        }
    } catch (const Json::exception& e) {
        throw std::invalid_argument(std::string("malformed model document: ") + e.what());
    }
    require_valid(mdp);
    return mdp;
}

inline ControlledMarkovProcess parse_mdp(const std::string& text) {
    Json j = Json::parse(text, nullptr, true, true);
    return mdp_from_json(j);
}

inline std::string fingerprint_mdp(const ControlledMarkovProcess& mdp) {
    return to_hex16(fnv1a64(serialize_mdp(mdp)));
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << text;
    if (!out) throw std::runtime_error("write failed: " + path);
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline ControlledMarkovProcess load_mdp(const std::string& path) {
    return parse_mdp(read_text_file(path));
}

struct PolicyMetadata {
    double beta = 0.0;
    double gamma = 0.0;
    int t_max = 0;
    std::string mdp_fingerprint;
};

inline Json policy_metadata_json(const PolicyMetadata& m) {
    return Json{{"beta", m.beta},
                {"gamma", m.gamma},
                {"t_max", m.t_max},
                {"mdp_fingerprint", m.mdp_fingerprint}};
}

inline Json decoder_to_json(const DecoderPolicy& dec) {
    Json rows = Json::array();
    for (int delta = 0; delta <= dec.t_max; ++delta) {
        Json row = Json::array();
        for (int sl = 0; sl < dec.n_states; ++sl) row.push_back(dec.act(delta, sl));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline DecoderPolicy decoder_from_json(const Json& j) {
    const int t_max = static_cast<int>(j.size()) - 1;
    const int n = static_cast<int>(j.at(0).size());
    DecoderPolicy dec(n, t_max);
    for (int delta = 0; delta <= t_max; ++delta)
        for (int sl = 0; sl < n; ++sl) dec.set(delta, sl, j.at(delta).at(sl).get<int>());
    return dec;
}

inline Json encoder_to_json(const EncoderPolicy& enc) {
    Json by_delta = Json::array();
    for (int delta = 0; delta <= enc.t_max; ++delta) {
        Json by_sl = Json::array();
        for (int sl = 0; sl < enc.n_states; ++sl) {
            Json row = Json::array();
            for (int s = 0; s < enc.n_states; ++s) row.push_back(enc.decide(s, delta, sl));
            by_sl.push_back(std::move(row));
        }
        by_delta.push_back(std::move(by_sl));
    }
    return by_delta;
}

inline EncoderPolicy encoder_from_json(const Json& j) {
    const int t_max = static_cast<int>(j.size()) - 1;
    const int n = static_cast<int>(j.at(0).size());
    EncoderPolicy enc(n, t_max);
    for (int delta = 0; delta <= t_max; ++delta)
        for (int sl = 0; sl < n; ++sl)
            for (int s = 0; s < n; ++s)
                enc.set(s, delta, sl, j.at(delta).at(sl).at(s).get<int>());
    require_encoder(enc);
    return enc;
}

}  // namespace remocom
