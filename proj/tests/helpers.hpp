#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "ckg/cohort.hpp"
#include "ckg/graph.hpp"

namespace testing {

namespace fs = std::filesystem;

/// Fresh directory under the system temp dir, removed on destruction.
struct TempDir {
    fs::path path;

    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path = fs::temp_directory_path() / ("ckg_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }

    std::string file(const std::string& name, const std::string& content) const {
        auto p = path / name;
        std::ofstream(p, std::ios::binary) << content;
        return p.string();
    }
    std::string operator/(const std::string& name) const { return (path / name).string(); }
};

inline std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline ckg::NodeId D(const std::string& c) { return ckg::NodeId::disease(c); }
inline ckg::NodeId R(const std::string& c) { return ckg::NodeId::drug(c); }

inline ckg::Edge E(const ckg::NodeId& s, ckg::Relation r, const ckg::NodeId& d) { return ckg::Edge{s, r, d}; }

inline ckg::Date day(const std::string& iso) { return ckg::Date::parse(iso); }

} // namespace testing
