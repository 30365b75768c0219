// Copyright 2026 The QESN Observer Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#pragma once

#include <string>

#include <json.hpp>

#include "qesn/circuit/config.hpp"
#include "qesn/circuit/weights.hpp"

namespace qesn {

using Json = nlohmann::ordered_json;

inline Json config_to_json(const QesnConfig &c) {
    Json j;
    j["n_qubits"] = c.n_qubits;
    j["context"] = c.context;
    j["input_dim"] = c.input_dim;
    j["n_blocks"] = c.n_blocks;
    j["kappa"] = c.kappa;
    j["seed"] = c.seed;
    j["shots"] = c.shots;
    j["backend"] = std::string(to_string(c.backend));
    j["noise_p"] = c.noise_p ? Json(*c.noise_p) : Json(nullptr);
    j["keep_cnot"] = c.keep_cnot;
    j["weight_mean"] = c.weight_mean;
    j["weight_stddev"] = c.weight_stddev;
    return j;
}

/// Missing keys keep the values already in `base`.
inline QesnConfig config_from_json(const Json &j, QesnConfig base = {}) {
    detail::require(j.is_object(), "qesn config must be a JSON object");
    try {
        auto take = [&](const char *key, auto &field) {
            if (j.contains(key)) {
                j.at(key).get_to(field);
            }
        };
        take("n_qubits", base.n_qubits);
        take("context", base.context);
        take("input_dim", base.input_dim);
        take("n_blocks", base.n_blocks);
        take("kappa", base.kappa);
        take("seed", base.seed);
        take("shots", base.shots);
        if (j.contains("backend")) {
            base.backend = backend_from_string(j.at("backend").get<std::string>());
        }
        if (j.contains("noise_p")) {
            base.noise_p = j.at("noise_p").is_null()
                               ? std::nullopt
                               : std::optional<double>(j.at("noise_p").get<double>());
        }
        take("keep_cnot", base.keep_cnot);
        take("weight_mean", base.weight_mean);
        take("weight_stddev", base.weight_stddev);
        take("workers", base.workers);
    } catch (const nlohmann::json::exception &e) {
        throw InvalidArgument(std::string("bad qesn config: ") + e.what());
    }
    return base;
}

inline Json weights_to_json(const QesnWeights &w, const QesnConfig &config) {
    Json j;
    Json w_in = Json::array();
    for (std::size_t t = 0; t < w.window; ++t) {
        Json per_t = Json::array();
        for (std::size_t i = 0; i < w.n_qubits; ++i) {
            per_t.push_back({w.in(t, i, 0), w.in(t, i, 1), w.in(t, i, 2)});
        }
        w_in.push_back(std::move(per_t));
    }
    j["w_in"] = std::move(w_in);
    j["w_bias"] = w.w_bias;
    j["w_ent"] = w.w_ent;
    j["w_mem"] = w.w_mem;
    j["masks"] = {{"ent_pruned", w.ent_pruned}, {"mem_pruned", w.mem_pruned}};
    j["seed"] = w.seed;
    j["config"] = config_to_json(config);
    return j;
}

struct LoadedWeights {
    QesnWeights weights;
    QesnConfig config;
};

inline LoadedWeights weights_from_json(const Json &j) {
    LoadedWeights out;
    try {
        out.config = config_from_json(j.at("config"));
        QesnWeights &w = out.weights;
        const Json &w_in = j.at("w_in");
        w.window = w_in.size();
        w.n_qubits = w.window == 0 ? out.config.n_qubits : w_in.at(0).size();
        w.w_in.reserve(w.window * w.n_qubits * 3);
        for (const auto &per_t : w_in) {
            detail::require(per_t.size() == w.n_qubits, "ragged w_in");
            for (const auto &axes : per_t) {
                detail::require(axes.size() == 3, "w_in entries need three axes");
                for (const auto &v : axes) {
                    w.w_in.push_back(v.get<double>());
                }
            }
        }
        j.at("w_bias").get_to(w.w_bias);
        j.at("w_ent").get_to(w.w_ent);
        j.at("w_mem").get_to(w.w_mem);
        j.at("masks").at("ent_pruned").get_to(w.ent_pruned);
        j.at("masks").at("mem_pruned").get_to(w.mem_pruned);
        j.at("seed").get_to(w.seed);
        const std::size_t pairs = w.n_qubits / 2;
        detail::require(w.w_bias.size() == w.n_qubits && w.w_ent.size() == pairs &&
                            w.w_mem.size() == pairs && w.ent_pruned.size() == pairs &&
                            w.mem_pruned.size() == pairs,
                        "weight arrays have inconsistent sizes");
    } catch (const nlohmann::json::exception &e) {
        throw InvalidArgument(std::string("bad weights document: ") + e.what());
    }
    return out;
}

} // namespace qesn
