// Run manifests: the resolved configuration plus FNV-1a hashes of every
// input and output file, written without timestamps so verification-mode
// reruns produce byte-identical manifests.
#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "xrid/error.hpp"

namespace xrid {

inline std::uint64_t fnv1a_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot hash missing file: " + path.string());
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    char buffer[4096];
    while (in.read(buffer, sizeof(buffer)) || in.gcount() > 0) {
        const std::streamsize n = in.gcount();
        for (std::streamsize i = 0; i < n; ++i) {
            hash ^= static_cast<unsigned char>(buffer[i]);
            hash *= 0x100000001b3ULL;
        }
        if (in.eof()) break;
    }
    return hash;
}

class RunManifest {
public:
    explicit RunManifest(std::string command) : command_(std::move(command)) {}

    void set(const std::string& key, const std::string& value) {
        entries_.emplace_back(key, value);
    }
    void add_input(const std::filesystem::path& path) { inputs_.push_back(path); }
    void add_output(const std::filesystem::path& path) { outputs_.push_back(path); }

    void write(const std::filesystem::path& path) const {
        std::ofstream out(path);
        if (!out) throw IoError("cannot write manifest: " + path.string());
        out << "xrid-run-manifest 1\n";
        out << "command=" << command_ << '\n';
        auto sorted = entries_;
        std::sort(sorted.begin(), sorted.end());
        for (const auto& [key, value] : sorted) out << key << '=' << value << '\n';
        char hex[32];
        for (const auto& file : inputs_) {
            std::snprintf(hex, sizeof(hex), "%016llx",
                          static_cast<unsigned long long>(fnv1a_file(file)));
            out << "input " << file.string() << " fnv64=" << hex << '\n';
        }
        for (const auto& file : outputs_) {
            std::snprintf(hex, sizeof(hex), "%016llx",
                          static_cast<unsigned long long>(fnv1a_file(file)));
            out << "output " << file.string() << " fnv64=" << hex << '\n';
        }
        if (!out) throw IoError("write failed: " + path.string());
    }

private:
    std::string command_;
    std::vector<std::pair<std::string, std::string>> entries_;
    std::vector<std::filesystem::path> inputs_;
    std::vector<std::filesystem::path> outputs_;
};

} // namespace xrid
