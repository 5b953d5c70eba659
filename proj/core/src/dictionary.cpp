#include "kgqa/error.hpp"
#include "kgqa/graph.hpp"
#include "kgqa/rng.hpp"

namespace kgqa {

OrderedDictionary::OrderedDictionary(std::vector<Symbol> sequence, std::size_t num_entities,
                                     std::size_t num_relations, std::uint64_t seed)
    : sequence_(std::move(sequence)),
      entity_pos_(num_entities, SIZE_MAX),
      relation_pos_(num_relations, SIZE_MAX),
      num_entities_(num_entities),
      num_relations_(num_relations),
      seed_(seed) {
    if (sequence_.size() != num_entities + num_relations) {
        throw ArgumentError("dictionary size does not equal entity + relation count");
    }
    for (std::size_t i = 0; i < sequence_.size(); ++i) {
        const auto& s = sequence_[i];
        auto& slots = s.kind == SymbolKind::Entity ? entity_pos_ : relation_pos_;
        if (s.index >= slots.size() || slots[s.index] != SIZE_MAX) {
            throw ArgumentError("dictionary sequence is not a bijection");
        }
        slots[s.index] = i;
    }
}

std::size_t OrderedDictionary::position_of(Symbol s) const {
    const auto& slots = s.kind == SymbolKind::Entity ? entity_pos_ : relation_pos_;
    if (s.index >= slots.size()) throw LookupError("symbol not in dictionary");
    return slots[s.index];
}

std::vector<std::string> OrderedDictionary::names(const KnowledgeGraph& g) const {
    std::vector<std::string> out;
    out.reserve(sequence_.size());
    for (const auto& s : sequence_) {
        out.push_back(s.kind == SymbolKind::Entity ? g.entity_name(s.index)
                                                   : g.relation_name(s.index));
    }
    return out;
}

std::uint64_t OrderedDictionary::order_hash(const KnowledgeGraph& g) const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& s : sequence_) {
        h = fnv1a64(s.kind == SymbolKind::Entity ? "E" : "R", h);
        h = fnv1a64(s.kind == SymbolKind::Entity ? g.entity_name(s.index) : g.relation_name(s.index), h);
        h = fnv1a64(std::string_view("\0", 1), h);
    }
    return h;
}

bool OrderedDictionary::matches(const KnowledgeGraph& g) const {
    return num_entities_ == g.num_entities() && num_relations_ == g.num_relations();
}

OrderedDictionary build_dictionary(const KnowledgeGraph& g, std::uint64_t seed) {
    g.validate();
    std::vector<Symbol> seq;
    seq.reserve(g.num_entities() + g.num_relations());
    for (std::uint32_t i = 0; i < g.num_entities(); ++i) seq.push_back({SymbolKind::Entity, i});
    for (std::uint32_t i = 0; i < g.num_relations(); ++i) seq.push_back({SymbolKind::Relation, i});
    Rng rng(derive_seed(seed, "dictionary"));
    rng.shuffle(seq);
    return OrderedDictionary(std::move(seq), g.num_entities(), g.num_relations(), seed);
}

}  // namespace kgqa
