#pragma once

#include <openssl/evp.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "windxai/core.hpp"

namespace windxai {

inline std::string sha256_hex(const void* data, std::size_t len) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int digest_len = 0;
    if (EVP_Digest(data, len, digest, &digest_len, EVP_sha256(), nullptr) != 1)
        throw NumericError("sha256 failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(digest_len * 2);
    for (unsigned int i = 0; i < digest_len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xf];
    }
    return out;
}

inline std::string sha256_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot hash missing file: " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return sha256_hex(bytes.data(), bytes.size());
}

// Reproducibility record written at the end of every CLI run: the resolved
// configuration, digests of inputs and outputs, and wall-clock timings.
// Identical (config, data, seeds, version) must yield identical digests;
// timings are informational only.
class ExperimentManifest {
  public:
    explicit ExperimentManifest(std::string command) : start_(clock_t::now()) {
        doc_["toolkit_version"] = kVersion;
        doc_["command"] = std::move(command);
        doc_["inputs"] = nlohmann::json::array();
        doc_["outputs"] = nlohmann::json::array();
    }

    void set_config(nlohmann::json config) { doc_["config"] = std::move(config); }

    void add_input(const std::string& path) {
        doc_["inputs"].push_back({{"path", path}, {"sha256", sha256_file(path)}});
    }

    void add_input_digest(const std::string& name, const std::string& digest) {
        doc_["inputs"].push_back({{"name", name}, {"sha256", digest}});
    }

    void add_output(const std::string& path) {
        doc_["outputs"].push_back({{"path", path}, {"sha256", sha256_file(path)}});
    }

    void note(const std::string& key, nlohmann::json value) { doc_[key] = std::move(value); }

    // Atomic write: the manifest appears complete or not at all.
    void write(const std::string& path) {
        const auto elapsed = std::chrono::duration<double>(clock_t::now() - start_).count();
        doc_["wall_clock_seconds"] = elapsed;
        const std::string tmp = path + ".tmp";
        {
            std::ofstream out(tmp, std::ios::binary);
            if (!out) throw DataError("cannot write manifest: " + tmp);
            out << doc_.dump(2) << '\n';
        }
        std::filesystem::rename(tmp, path);
    }

    const nlohmann::json& doc() const { return doc_; }

  private:
    using clock_t = std::chrono::steady_clock;
    nlohmann::json doc_;
    clock_t::time_point start_;
};

}  // namespace windxai
