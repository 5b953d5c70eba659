#pragma once

#include <cstdint>
#include <exception>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "kgqa/alignment.hpp"
#include "kgqa/checkpoint.hpp"
#include "kgqa/config.hpp"
#include "kgqa/graph.hpp"
#include "kgqa/qa.hpp"
#include "kgqa/text_embed.hpp"

namespace kgqa::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kValidation = 2, kNumeric = 3 };

int exit_code_for(const std::exception& e);

struct InputFile {
    std::string path;
    std::string kind;  // triples, graph, dataset, templates, encoder, alignment, semantic, scene, answers
};

struct RunManifest {
    std::string command;
    std::string config_path;
    std::uint64_t seed = 0;
    nlohmann::ordered_json seeds = nlohmann::ordered_json::object();
    std::vector<InputFile> inputs;
    std::string output_dir;
    nlohmann::ordered_json params = nlohmann::ordered_json::object();
};

// Checks that every input exists and that checkpoints carry a supported
// version and the expected kind. Throws ValidationError.
void check_inputs(const RunManifest& m);
// Writes <output_dir>/manifest.json, creating the directory.
void write_manifest(const RunManifest& m);
nlohmann::ordered_json manifest_to_json(const RunManifest& m);

Config load_config(const std::string& path);  // empty path: empty config

void write_text(const std::string& path, const std::string& text);
std::string join_path(const std::string& dir, const std::string& name);

// Graphs with their encoders and semantic vectors, ready for the head.
class Workspace {
public:
    Workspace(const std::vector<std::string>& graph_paths, const std::vector<std::string>& encoder_paths,
              const std::string& semantic_path);

    const std::vector<GraphInputs>& inputs() const noexcept { return inputs_; }
    const std::vector<const KnowledgeGraph*>& graphs() const noexcept { return graph_ptrs_; }
    const GraphInputs& inputs_for(const std::string& graph_id) const;  // throws LookupError
    int semantic_dim() const noexcept { return d_sem_; }
    int structural_dim() const noexcept { return d_struct_; }

private:
    std::vector<std::unique_ptr<KnowledgeGraph>> graphs_;
    std::vector<const KnowledgeGraph*> graph_ptrs_;
    std::vector<GraphInputs> inputs_;
    int d_sem_ = 0;
    int d_struct_ = 0;
};

std::vector<QuestionTemplate> load_bank(const std::string& path);  // empty: default bank

std::string join_names(const std::vector<std::string>& names);

}  // namespace kgqa::cli
