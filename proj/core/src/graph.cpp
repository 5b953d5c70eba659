#include "kgqa/graph.hpp"

#include <algorithm>

#include "kgqa/error.hpp"

namespace kgqa {

KnowledgeGraph KnowledgeGraph::from_parts(std::string graph_id, std::vector<std::string> entities,
                                          std::vector<std::string> relations,
                                          std::vector<Triple> triples) {
    KnowledgeGraph g(std::move(graph_id));
    for (const auto& e : entities) {
        if (e.empty()) throw ValidationError("empty entity name");
        if (g.find_entity(e)) throw ValidationError("duplicate entity name '" + e + "'");
        g.add_entity(e);
    }
    for (const auto& r : relations) {
        if (r.empty()) throw ValidationError("empty relation name");
        if (g.find_relation(r)) throw ValidationError("duplicate relation name '" + r + "'");
        g.add_relation(r);
    }
    for (const auto& t : triples) g.add_triple(t);
    return g;
}

EntityId KnowledgeGraph::add_entity(std::string_view name) {
    if (name.empty()) throw ValidationError("empty entity name");
    auto it = entity_index_.find(std::string(name));
    if (it != entity_index_.end()) return it->second;
    const auto id = static_cast<EntityId>(entities_.size());
    entities_.emplace_back(name);
    entity_index_.emplace(entities_.back(), id);
    return id;
}

RelationId KnowledgeGraph::add_relation(std::string_view name) {
    if (name.empty()) throw ValidationError("empty relation name");
    auto it = relation_index_.find(std::string(name));
    if (it != relation_index_.end()) return it->second;
    const auto id = static_cast<RelationId>(relations_.size());
    relations_.emplace_back(name);
    relation_index_.emplace(relations_.back(), id);
    return id;
}

void KnowledgeGraph::add_triple(std::string_view head, std::string_view relation,
                                std::string_view tail) {
    const EntityId h = add_entity(head);
    const RelationId r = add_relation(relation);
    const EntityId t = add_entity(tail);
    add_triple(Triple{h, r, t});
}

void KnowledgeGraph::add_triple(Triple t) {
    if (t.head >= entities_.size() || t.tail >= entities_.size() ||
        t.relation >= relations_.size()) {
        throw ValidationError("triple index out of range");
    }
    if (triple_index_.count(t)) {
        throw ValidationError("duplicate triple (" + entities_[t.head] + ", " +
                              relations_[t.relation] + ", " + entities_[t.tail] + ")");
    }
    triple_index_.emplace(t, triples_.size());
    triples_.push_back(t);
}

std::optional<EntityId> KnowledgeGraph::find_entity(std::string_view name) const {
    auto it = entity_index_.find(std::string(name));
    if (it == entity_index_.end()) return std::nullopt;
    return it->second;
}

std::optional<RelationId> KnowledgeGraph::find_relation(std::string_view name) const {
    auto it = relation_index_.find(std::string(name));
    if (it == relation_index_.end()) return std::nullopt;
    return it->second;
}

EntityId KnowledgeGraph::entity_id(std::string_view name) const {
    if (auto id = find_entity(name)) return *id;
    throw LookupError("unknown entity '" + std::string(name) + "'");
}

RelationId KnowledgeGraph::relation_id(std::string_view name) const {
    if (auto id = find_relation(name)) return *id;
    throw LookupError("unknown relation '" + std::string(name) + "'");
}

bool KnowledgeGraph::contains(const Triple& t) const { return triple_index_.count(t) > 0; }

void KnowledgeGraph::validate() const {
    std::unordered_map<std::string, int> seen;
    for (const auto& e : entities_) {
        if (e.empty()) throw ValidationError("empty entity name");
        if (seen[e]++) throw ValidationError("duplicate entity name '" + e + "'");
    }
    seen.clear();
    for (const auto& r : relations_) {
        if (r.empty()) throw ValidationError("empty relation name");
        if (seen[r]++) throw ValidationError("duplicate relation name '" + r + "'");
    }
    std::unordered_map<Triple, int, TripleHash> counts;
    for (const auto& t : triples_) {
        if (t.head >= entities_.size() || t.tail >= entities_.size() ||
            t.relation >= relations_.size()) {
            throw ValidationError("triple index out of range");
        }
        if (counts[t]++) throw ValidationError("duplicate triple");
    }
}

// ---- augmentation ------------------------------------------------------------

AugmentedGraph::AugmentedGraph(KnowledgeGraph base) : base_(std::move(base)) {
    const auto& rels = base_.relations();
    for (const auto& r : rels) {
        const bool is_self = r == kSelfRelation;
        const bool is_inv = r.size() >= kInverseSuffix.size() &&
                            std::string_view(r).substr(r.size() - kInverseSuffix.size()) ==
                                kInverseSuffix;
        if (is_self || is_inv) {
            throw ValidationError("relation name '" + r + "' collides with a reserved name");
        }
    }
    relations_ = rels;
    for (const auto& r : rels) relations_.push_back(r + std::string(kInverseSuffix));
    relations_.emplace_back(kSelfRelation);

    triples_.reserve(2 * base_.num_triples() + base_.num_entities());
    for (const auto& t : base_.triples()) {
        triples_.push_back({t.head, t.relation, t.tail, Direction::Original});
    }
    for (const auto& t : base_.triples()) {
        triples_.push_back({t.tail, inverse_of(t.relation), t.head, Direction::Inverse});
    }
    for (EntityId e = 0; e < base_.num_entities(); ++e) {
        triples_.push_back({e, self_relation(), e, Direction::Self});
    }
}

AugmentedGraph augment(const KnowledgeGraph& g) {
    g.validate();
    return AugmentedGraph(g);
}

}  // namespace kgqa
