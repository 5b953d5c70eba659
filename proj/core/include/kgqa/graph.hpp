#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace kgqa {

using EntityId = std::uint32_t;
using RelationId = std::uint32_t;

struct Triple {
    EntityId head;
    RelationId relation;
    EntityId tail;

    friend bool operator==(const Triple&, const Triple&) = default;
};

// Directed multi-relational graph. Triple order is meaningful: it records
// the order in which a step uses its parts and tools.
class KnowledgeGraph {
public:
    KnowledgeGraph() = default;
    explicit KnowledgeGraph(std::string graph_id) : graph_id_(std::move(graph_id)) {}

    // Builds and validates a graph from explicit lists.
    static KnowledgeGraph from_parts(std::string graph_id, std::vector<std::string> entities,
                                     std::vector<std::string> relations,
                                     std::vector<Triple> triples);

    // Registers names on first use. Throws ValidationError on a duplicate triple.
    EntityId add_entity(std::string_view name);
    RelationId add_relation(std::string_view name);
    void add_triple(std::string_view head, std::string_view relation, std::string_view tail);
    void add_triple(Triple t);

    const std::string& graph_id() const noexcept { return graph_id_; }
    void set_graph_id(std::string id) { graph_id_ = std::move(id); }

    const std::vector<std::string>& entities() const noexcept { return entities_; }
    const std::vector<std::string>& relations() const noexcept { return relations_; }
    const std::vector<Triple>& triples() const noexcept { return triples_; }

    std::size_t num_entities() const noexcept { return entities_.size(); }
    std::size_t num_relations() const noexcept { return relations_.size(); }
    std::size_t num_triples() const noexcept { return triples_.size(); }

    std::optional<EntityId> find_entity(std::string_view name) const;
    std::optional<RelationId> find_relation(std::string_view name) const;
    EntityId entity_id(std::string_view name) const;      // throws LookupError
    RelationId relation_id(std::string_view name) const;  // throws LookupError
    bool contains(const Triple& t) const;

    const std::string& entity_name(EntityId id) const { return entities_.at(id); }
    const std::string& relation_name(RelationId id) const { return relations_.at(id); }

    // Checks every structural invariant; throws ValidationError.
    void validate() const;

    friend bool operator==(const KnowledgeGraph& a, const KnowledgeGraph& b) {
        return a.graph_id_ == b.graph_id_ && a.entities_ == b.entities_ &&
               a.relations_ == b.relations_ && a.triples_ == b.triples_;
    }

private:
    struct TripleHash {
        std::size_t operator()(const Triple& t) const noexcept {
            std::uint64_t h = (static_cast<std::uint64_t>(t.head) << 32) | t.tail;
            h ^= static_cast<std::uint64_t>(t.relation) * 0x9e3779b97f4a7c15ULL;
            return static_cast<std::size_t>(h ^ (h >> 29));
        }
    };

    std::string graph_id_;
    std::vector<std::string> entities_;
    std::vector<std::string> relations_;
    std::vector<Triple> triples_;
    std::unordered_map<std::string, EntityId> entity_index_;
    std::unordered_map<std::string, RelationId> relation_index_;
    std::unordered_map<Triple, std::size_t, TripleHash> triple_index_;
};

// ---- text formats --------------------------------------------------------

// head<TAB>relation<TAB>tail per line, '#' comments, blank lines ignored.
KnowledgeGraph parse_triples(std::string_view text, std::string graph_id = {});
std::string serialize_triples(const KnowledgeGraph& g);

// {graph_id, entities[], relations[], triples[[h,r,t]...]}
std::string graph_to_json(const KnowledgeGraph& g, int indent = -1);
KnowledgeGraph graph_from_json(std::string_view text);

KnowledgeGraph load_graph_file(const std::string& path);  // .tsv or .json
void save_graph_json(const KnowledgeGraph& g, const std::string& path);

// ---- augmentation ------------------------------------------------------------

enum class Direction : std::uint8_t { Original = 0, Inverse = 1, Self = 2 };
inline constexpr int kNumDirections = 3;

inline constexpr std::string_view kSelfRelation = "__self__";
inline constexpr std::string_view kInverseSuffix = "__inv";

struct AugmentedTriple {
    EntityId source;
    RelationId relation;  // index into AugmentedGraph::relations()
    EntityId target;
    Direction direction;
};

// Base graph plus one inverse edge per triple and one self-loop per entity.
// Relation layout: [0, R) base, [R, 2R) inverses (r + R), 2R self-loop.
class AugmentedGraph {
public:
    explicit AugmentedGraph(KnowledgeGraph base);

    const KnowledgeGraph& base() const noexcept { return base_; }
    const std::vector<std::string>& relations() const noexcept { return relations_; }
    const std::vector<AugmentedTriple>& triples() const noexcept { return triples_; }
    std::size_t num_entities() const noexcept { return base_.num_entities(); }
    std::size_t num_relations() const noexcept { return relations_.size(); }
    std::size_t num_base_relations() const noexcept { return base_.num_relations(); }

    RelationId inverse_of(RelationId r) const {
        return static_cast<RelationId>(r + base_.num_relations());
    }
    RelationId self_relation() const {
        return static_cast<RelationId>(2 * base_.num_relations());
    }

private:
    KnowledgeGraph base_;
    std::vector<std::string> relations_;
    std::vector<AugmentedTriple> triples_;
};

AugmentedGraph augment(const KnowledgeGraph& g);

// ---- subgraph sampling -------------------------------------------------------

// Seeded random walk over triples from a random head entity; each subgraph
// keeps its triples in the parent's order.
std::vector<KnowledgeGraph> split_random_subgraphs(const KnowledgeGraph& g, std::size_t count,
                                                   std::size_t min_triples, std::uint64_t seed);

// Subgraph induced by the selected triple positions (in ascending order).
KnowledgeGraph induced_subgraph(const KnowledgeGraph& g, const std::vector<std::size_t>& positions,
                                std::string graph_id);

// ---- symbol dictionary -----------------------------------------------------

enum class SymbolKind : std::uint8_t { Entity, Relation };

struct Symbol {
    SymbolKind kind;
    std::uint32_t index;

    friend bool operator==(const Symbol&, const Symbol&) = default;
};

// Random-order dictionary over all entities followed by all relations.
class OrderedDictionary {
public:
    OrderedDictionary() = default;
    OrderedDictionary(std::vector<Symbol> sequence, std::size_t num_entities,
                      std::size_t num_relations, std::uint64_t seed);

    std::size_t size() const noexcept { return sequence_.size(); }
    const std::vector<Symbol>& sequence() const noexcept { return sequence_; }
    std::uint64_t seed() const noexcept { return seed_; }

    const Symbol& symbol_at(std::size_t position) const { return sequence_.at(position); }
    std::size_t position_of(Symbol s) const;
    std::size_t num_entities() const noexcept { return num_entities_; }
    std::size_t num_relations() const noexcept { return num_relations_; }

    // Symbol names in dictionary order.
    std::vector<std::string> names(const KnowledgeGraph& g) const;
    // FNV-1a over the ordered symbol names; stored in checkpoints.
    std::uint64_t order_hash(const KnowledgeGraph& g) const;
    bool matches(const KnowledgeGraph& g) const;

private:
    std::vector<Symbol> sequence_;
    std::vector<std::size_t> entity_pos_;
    std::vector<std::size_t> relation_pos_;
    std::size_t num_entities_ = 0;
    std::size_t num_relations_ = 0;
    std::uint64_t seed_ = 0;
};

OrderedDictionary build_dictionary(const KnowledgeGraph& g, std::uint64_t seed);

}  // namespace kgqa
