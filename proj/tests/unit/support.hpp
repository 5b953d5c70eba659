#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <unistd.h>

#include "kgqa/graph.hpp"

namespace kgqa::test {

// Two-step product with one tool per step and an ordered part list in step1.
inline KnowledgeGraph toy_product() {
    return parse_triples(
        "CV01S\thas_step\tstep1\n"
        "CV01S\thas_step\tstep2\n"
        "step1\thas_action\tinsert\n"
        "step1\tacts_to\tworkbench\n"
        "step1\thas_detail\tcheck_seal\n"
        "step1\tacts_on\tbolt\n"
        "step1\tuses_tool\twrench\n"
        "step1\tacts_on\tcap\n"
        "step2\thas_action\ttighten\n"
        "step2\tuses_tool\thammer\n"
        "step2\tacts_on\tnut\n"
        "step2\tproduces\tcap_unit\n"
        "bolt\thas_attribute\tsteel\n",
        "CV01S");
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("kgqa_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::string file(const std::string& name) const { return (path_ / name).string(); }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace kgqa::test
