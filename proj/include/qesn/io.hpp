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

#include <array>
#include <charconv>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>
#include <openssl/evp.h>

#include "qesn/error.hpp"

namespace qesn {

inline std::string sha256_hex(std::string_view bytes) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("SHA-256 computation failed");
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[md[i] >> 4]);
        out.push_back(hex[md[i] & 0xF]);
    }
    return out;
}

inline std::string read_file(const std::filesystem::path &p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot read " + p.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Shortest decimal that round-trips to the same double.
inline std::string format_double(double v) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return {buf, res.ptr};
}

/// CSV text: header line, then one line per matrix row prefixed by `index`.
inline std::string csv_table(const std::vector<std::string> &header, const Eigen::MatrixXd &values,
                             const std::vector<std::size_t> &index) {
    detail::require(index.size() == static_cast<std::size_t>(values.rows()), "index length mismatch");
    detail::require(header.size() == static_cast<std::size_t>(values.cols()) + 1, "header width mismatch");
    std::string out;
    for (std::size_t j = 0; j < header.size(); ++j) {
        out += (j ? "," : "") + header[j];
    }
    out += '\n';
    for (Eigen::Index r = 0; r < values.rows(); ++r) {
        out += std::to_string(index[static_cast<std::size_t>(r)]);
        for (Eigen::Index c = 0; c < values.cols(); ++c) {
            out += ',';
            out += format_double(values(r, c));
        }
        out += '\n';
    }
    return out;
}

/**
 * Writes the files of one run into a directory and records their SHA-256
 * sums. `abandon` removes everything this writer created.
 */
class ArtifactWriter {
  public:
    /// Files listed by a manifest already in `dir` are removed first, so a
    /// re-run into the same directory leaves no stale artifacts behind.
    explicit ArtifactWriter(std::filesystem::path dir) : dir_(std::move(dir)) {
        created_dir_ = !std::filesystem::exists(dir_);
        std::filesystem::create_directories(dir_);
        clear_previous();
    }

    [[nodiscard]] const std::filesystem::path &dir() const noexcept { return dir_; }

    void write(const std::string &name, std::string_view bytes) {
        const auto path = dir_ / name;
        std::filesystem::create_directories(path.parent_path());
        {
            std::ofstream out(path, std::ios::binary | std::ios::trunc);
            if (!out) {
                throw std::runtime_error("cannot write " + path.string());
            }
            out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        }
        for (auto &f : files_) {
            if (f.name == name) {
                f = {name, sha256_hex(bytes), bytes.size()};
                return;
            }
        }
        files_.push_back({name, sha256_hex(bytes), bytes.size()});
    }

    void write_json(const std::string &name, const nlohmann::ordered_json &j) {
        write(name, j.dump(2) + "\n");
    }

    struct Entry {
        std::string name;
        std::string sha256;
        std::size_t bytes = 0;
    };

    [[nodiscard]] const std::vector<Entry> &files() const noexcept { return files_; }

    /// manifest.json: every written file with its checksum, plus `extra`.
    void write_manifest(nlohmann::ordered_json extra) {
        auto list = nlohmann::ordered_json::array();
        for (const auto &f : files_) {
            list.push_back({{"path", f.name}, {"sha256", f.sha256}, {"bytes", f.bytes}});
        }
        extra["files"] = std::move(list);
        const std::string text = extra.dump(2) + "\n";
        std::ofstream out(dir_ / "manifest.json", std::ios::binary | std::ios::trunc);
        out << text;
        if (!out) {
            throw std::runtime_error("cannot write " + (dir_ / "manifest.json").string());
        }
    }

    void abandon() noexcept {
        std::error_code ec;
        for (const auto &f : files_) {
            std::filesystem::remove(dir_ / f.name, ec);
        }
        std::filesystem::remove(dir_ / "manifest.json", ec);
        if (created_dir_) {
            std::filesystem::remove_all(dir_, ec);
        }
        files_.clear();
    }

  private:
    void clear_previous() {
        const auto manifest = dir_ / "manifest.json";
        if (!std::filesystem::exists(manifest)) {
            return;
        }
        nlohmann::ordered_json old;
        try {
            old = nlohmann::ordered_json::parse(read_file(manifest));
        } catch (const nlohmann::json::exception &) {
            return;
        }
        std::error_code ec;
        if (old.contains("files") && old.at("files").is_array()) {
            for (const auto &f : old.at("files")) {
                if (f.contains("path") && f.at("path").is_string()) {
                    const std::filesystem::path rel = f.at("path").get<std::string>();
                    if (rel.is_relative() && rel.lexically_normal().string().rfind("..", 0) != 0) {
                        std::filesystem::remove(dir_ / rel, ec);
                    }
                }
            }
        }
        std::filesystem::remove(manifest, ec);
    }

    std::filesystem::path dir_;
    bool created_dir_ = false;
    std::vector<Entry> files_;
};

/// Wall-clock stopwatch for manifest durations.
class Stopwatch {
  public:
    Stopwatch() : start_(std::chrono::steady_clock::now()) {}
    [[nodiscard]] double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

  private:
    std::chrono::steady_clock::time_point start_;
};

} // namespace qesn
