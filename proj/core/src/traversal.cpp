#include <algorithm>

#include "kgqa/error.hpp"
#include "kgqa/qa.hpp"

namespace kgqa {

namespace {

constexpr std::string_view kCategoryNames[kNumCategories] = {
    "action", "tools", "workspace", "detail", "parts_sequence", "attributes", "subassembly",
    "assembly",
};

}  // namespace

std::string_view to_string(Category c) { return kCategoryNames[static_cast<int>(c)]; }

Category category_from_string(std::string_view name) {
    for (int i = 0; i < kNumCategories; ++i) {
        if (kCategoryNames[i] == name) return static_cast<Category>(i);
    }
    throw LookupError("unknown category '" + std::string(name) + "'");
}

const std::vector<Category>& all_categories() {
    static const std::vector<Category> cats = [] {
        std::vector<Category> v;
        for (int i = 0; i < kNumCategories; ++i) v.push_back(static_cast<Category>(i));
        return v;
    }();
    return cats;
}

const std::vector<TraversalProgram>& registered_programs() {
    static const std::vector<TraversalProgram> programs = {
        {"step_parts_tools", {"acts_on", "uses_tool"}, ""},
        {"product_parts_tools", {"acts_on", "uses_tool"}, std::string(kHasStepRelation)},
    };
    return programs;
}

const TraversalProgram& find_program(std::string_view name) {
    for (const auto& p : registered_programs()) {
        if (p.name == name) return p;
    }
    throw ArgumentError("unknown traversal program '" + std::string(name) + "'");
}

std::vector<std::string> traverse_single_hop(const KnowledgeGraph& g, std::string_view anchor,
                                             std::string_view relation) {
    const EntityId a = g.entity_id(anchor);
    const RelationId r = g.relation_id(relation);
    std::vector<std::string> out;
    for (const auto& t : g.triples()) {
        if (t.head == a && t.relation == r) out.push_back(g.entity_name(t.tail));
    }
    return out;
}

namespace {

void collect(const KnowledgeGraph& g, EntityId from, const std::vector<RelationId>& rels,
             std::vector<std::string>& out) {
    for (const auto& t : g.triples()) {
        if (t.head != from) continue;
        if (std::find(rels.begin(), rels.end(), t.relation) != rels.end()) {
            out.push_back(g.entity_name(t.tail));
        }
    }
}

}  // namespace

std::vector<std::string> traverse_multi_hop(const KnowledgeGraph& g, std::string_view anchor,
                                            const TraversalProgram& program) {
    const EntityId a = g.entity_id(anchor);
    std::vector<RelationId> rels;
    for (const auto& name : program.relations) {
        if (auto r = g.find_relation(name)) rels.push_back(*r);
    }
    std::vector<std::string> out;
    if (program.via.empty()) {
        collect(g, a, rels, out);
        return out;
    }
    const auto via = g.find_relation(program.via);
    if (!via) return out;
    for (const auto& t : g.triples()) {
        if (t.head == a && t.relation == *via) collect(g, t.tail, rels, out);
    }
    return out;
}

std::vector<std::string> traverse_multi_hop(const KnowledgeGraph& g, std::string_view anchor,
                                            std::string_view program) {
    return traverse_multi_hop(g, anchor, find_program(program));
}

std::optional<std::string> product_of(const KnowledgeGraph& g, std::string_view entity) {
    const auto e = g.find_entity(entity);
    const auto has_step = g.find_relation(kHasStepRelation);
    if (!e || !has_step) return std::nullopt;
    for (const auto& t : g.triples()) {
        if (t.relation == *has_step && t.tail == *e) return g.entity_name(t.head);
    }
    // One hop further: a step that points at the entity.
    for (const auto& t : g.triples()) {
        if (t.tail != *e || t.relation == *has_step) continue;
        for (const auto& u : g.triples()) {
            if (u.relation == *has_step && u.tail == t.head) return g.entity_name(u.head);
        }
    }
    return std::nullopt;
}

std::vector<std::string> oracle_answer(const KnowledgeGraph& g, const QuestionTemplate& t,
                                       std::string_view anchor) {
    if (t.multi_hop()) return traverse_multi_hop(g, anchor, t.program);
    if (!g.find_relation(t.relation)) return {};
    return traverse_single_hop(g, anchor, t.relation);
}

}  // namespace kgqa
