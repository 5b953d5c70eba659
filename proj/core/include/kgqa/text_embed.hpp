#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "kgqa/graph.hpp"
#include "kgqa/tensor.hpp"

namespace kgqa {

inline constexpr int kDefaultSemanticDim = 768;
inline constexpr std::uint64_t kDefaultEmbedSeed = 0x5eed;

// Character-trigram feature hashing with signed buckets, L2-normalized.
Vector embed_label_builtin(std::string_view text, int d_sem = kDefaultSemanticDim,
                           std::uint64_t seed = kDefaultEmbedSeed);

double cosine_similarity(const Vector& a, const Vector& b);

enum class SemanticSource { Builtin, File };

class SemanticTable {
public:
    SemanticTable(int d_sem, SemanticSource source) : d_sem_(d_sem), source_(source) {}

    // Builtin table covering every entity and relation name of the graphs.
    static SemanticTable builtin(const std::vector<const KnowledgeGraph*>& graphs,
                                 int d_sem = kDefaultSemanticDim,
                                 std::uint64_t seed = kDefaultEmbedSeed);

    void insert(const std::string& name, Vector v);
    bool contains(std::string_view name) const;
    const Vector& at(std::string_view name) const;  // throws LookupError

    int dim() const noexcept { return d_sem_; }
    SemanticSource source() const noexcept { return source_; }
    std::size_t size() const noexcept { return names_.size(); }
    const std::vector<std::string>& names() const noexcept { return names_; }

    // Names of g that have no vector.
    std::vector<std::string> uncovered(const KnowledgeGraph& g) const;

private:
    int d_sem_;
    SemanticSource source_;
    std::vector<std::string> names_;
    std::unordered_map<std::string, Vector> vectors_;
};

// File: JSON header line {d_sem, count, names[]} then count*d_sem
// little-endian float32 values, row order = names order.
SemanticTable load_semantic_file(const std::string& path);
SemanticTable decode_semantic_table(const std::string& bytes);
std::string encode_semantic_table(const SemanticTable& table);
void save_semantic_file(const SemanticTable& table, const std::string& path);

// Row i = table[name of dictionary symbol i]. Throws LookupError listing
// every uncovered symbol.
EmbeddingMatrix assemble_semantic_matrix(const KnowledgeGraph& g, const OrderedDictionary& dict,
                                         const SemanticTable& table);

}  // namespace kgqa
