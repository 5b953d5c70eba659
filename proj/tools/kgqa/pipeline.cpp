#include "pipeline.hpp"

#include <filesystem>
#include <fstream>
#include <unordered_map>

#include "kgqa/encoder.hpp"
#include "kgqa/error.hpp"

namespace kgqa::cli {

namespace fs = std::filesystem;

int exit_code_for(const std::exception& e) {
    const auto* err = dynamic_cast<const Error*>(&e);
    if (!err) return kFailure;
    switch (err->kind()) {
        case ErrorKind::Numeric:
        case ErrorKind::Training:
            return kNumeric;
        default:
            return kValidation;
    }
}

namespace {

void check_checkpoint(const InputFile& f) {
    nlohmann::json head;
    try {
        head = nlohmann::json::parse(read_manifest(f.path));
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(f.path + ": unreadable checkpoint manifest (" + e.what() + ")");
    }
    const int version = head.value("version", -1);
    if (version != kCheckpointVersion) {
        throw ValidationError(f.path + ": checkpoint version " + std::to_string(version) + " is not supported (expected " +
                              std::to_string(kCheckpointVersion) + ")");
    }
    const std::string kind = head.value("kind", "");
    if (kind != f.kind) throw ValidationError(f.path + ": checkpoint holds '" + kind + "', expected '" + f.kind + "'");
}

}  // namespace

void check_inputs(const RunManifest& m) {
    if (!m.config_path.empty() && !fs::is_regular_file(m.config_path)) {
        throw ValidationError("config file not found: " + m.config_path);
    }
    for (const auto& f : m.inputs) {
        if (!fs::is_regular_file(f.path)) throw ValidationError(f.kind + " file not found: " + f.path);
        if (f.kind == "encoder" || f.kind == "alignment") check_checkpoint(f);
    }
}

nlohmann::ordered_json manifest_to_json(const RunManifest& m) {
    nlohmann::ordered_json j;
    j["command"] = m.command;
    j["config"] = m.config_path.empty() ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(m.config_path);
    j["seed"] = m.seed;
    j["seeds"] = m.seeds;
    auto& inputs = j["inputs"] = nlohmann::ordered_json::array();
    for (const auto& f : m.inputs) {
        nlohmann::ordered_json in{{"path", f.path}, {"kind", f.kind}};
        if (f.kind == "encoder" || f.kind == "alignment") {
            const auto head = nlohmann::json::parse(read_manifest(f.path));
            in["version"] = head.value("version", -1);
        }
        inputs.push_back(std::move(in));
    }
    j["output_dir"] = m.output_dir;
    j["params"] = m.params;
    return j;
}

void write_manifest(const RunManifest& m) {
    fs::create_directories(m.output_dir);
    write_text(join_path(m.output_dir, "manifest.json"), manifest_to_json(m).dump(2) + "\n");
}

Config load_config(const std::string& path) { return path.empty() ? Config{} : Config::load(path); }

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << text;
    if (!out) throw IoError("write failed: " + path);
}

std::string join_path(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

Workspace::Workspace(const std::vector<std::string>& graph_paths, const std::vector<std::string>& encoder_paths,
                     const std::string& semantic_path) {
    if (graph_paths.empty()) throw ArgumentError("at least one graph is required");
    if (encoder_paths.size() != graph_paths.size()) {
        throw ArgumentError("expected one encoder checkpoint per graph (" + std::to_string(graph_paths.size()) +
                            " graphs, " + std::to_string(encoder_paths.size()) + " encoders)");
    }
    for (const auto& p : graph_paths) {
        graphs_.push_back(std::make_unique<KnowledgeGraph>(load_graph_file(p)));
        graph_ptrs_.push_back(graphs_.back().get());
    }
    std::unordered_map<std::string, EncoderCheckpoint> encoders;
    for (const auto& p : encoder_paths) {
        EncoderCheckpoint enc = encoder_from_checkpoint(load_checkpoint(p));
        const std::string id = enc.graph_id;
        if (!encoders.emplace(id, std::move(enc)).second) {
            throw ValidationError("two encoder checkpoints for graph '" + id + "'");
        }
    }
    const SemanticTable table =
        semantic_path.empty() ? SemanticTable::builtin(graph_ptrs_) : load_semantic_file(semantic_path);
    d_sem_ = table.dim();
    inputs_.reserve(graphs_.size());
    for (const auto& g : graphs_) {
        auto it = encoders.find(g->graph_id());
        if (it == encoders.end()) throw ValidationError("no encoder checkpoint for graph '" + g->graph_id() + "'");
        AugmentedGraph ag(*g);
        check_encoder_matches(it->second, ag);
        OrderedDictionary dict = build_dictionary(*g, it->second.dict_seed);
        if (dict.order_hash(*g) != it->second.dict_order_hash) {
            throw ValidationError("dictionary order of graph '" + g->graph_id() + "' differs from its checkpoint");
        }
        EmbeddingMatrix s = encode_structural(ag, it->second.params, dict);
        EmbeddingMatrix e = assemble_semantic_matrix(*g, dict, table);
        d_struct_ = static_cast<int>(s.dim());
        inputs_.emplace_back(*g, std::move(dict), std::move(s.values), std::move(e.values));
    }
}

const GraphInputs& Workspace::inputs_for(const std::string& graph_id) const {
    for (const auto& in : inputs_) {
        if (in.graph->graph_id() == graph_id) return in;
    }
    throw LookupError("graph '" + graph_id + "' was not loaded");
}

std::vector<QuestionTemplate> load_bank(const std::string& path) {
    return path.empty() ? default_template_bank() : load_template_file(path);
}

std::string join_names(const std::vector<std::string>& names) {
    std::string out = "[";
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (i) out += ", ";
        out += names[i];
    }
    return out + "]";
}

}  // namespace kgqa::cli
