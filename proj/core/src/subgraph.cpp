#include <algorithm>
#include <set>

#include "kgqa/error.hpp"
#include "kgqa/graph.hpp"
#include "kgqa/rng.hpp"

namespace kgqa {

KnowledgeGraph induced_subgraph(const KnowledgeGraph& g, const std::vector<std::size_t>& positions,
                                std::string graph_id) {
    KnowledgeGraph sub(std::move(graph_id));
    for (auto p : positions) {
        const auto& t = g.triples().at(p);
        sub.add_triple(g.entity_name(t.head), g.relation_name(t.relation), g.entity_name(t.tail));
    }
    return sub;
}

std::vector<KnowledgeGraph> split_random_subgraphs(const KnowledgeGraph& g, std::size_t count,
                                                   std::size_t min_triples, std::uint64_t seed) {
    if (count == 0) throw ArgumentError("count must be positive");
    if (min_triples == 0) throw ArgumentError("min_triples must be positive");
    const std::size_t total = g.num_triples();
    if (min_triples > total) {
        throw ArgumentError("min_triples (" + std::to_string(min_triples) +
                            ") exceeds triple count (" + std::to_string(total) + ")");
    }

    // Incidence lists: triple positions touching each entity.
    std::vector<std::vector<std::size_t>> incident(g.num_entities());
    std::vector<EntityId> heads;
    for (std::size_t i = 0; i < total; ++i) {
        const auto& t = g.triples()[i];
        incident[t.head].push_back(i);
        if (t.tail != t.head) incident[t.tail].push_back(i);
        heads.push_back(t.head);
    }
    std::sort(heads.begin(), heads.end());
    heads.erase(std::unique(heads.begin(), heads.end()), heads.end());

    std::vector<KnowledgeGraph> out;
    out.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        Rng rng(derive_seed(seed, k));
        const std::size_t target = min_triples + static_cast<std::size_t>(
                                                     rng.below(total - min_triples + 1));
        std::vector<char> taken(total, 0);
        std::vector<char> visited(g.num_entities(), 0);
        std::vector<std::size_t> frontier;  // candidate triple positions
        std::size_t selected = 0;

        auto visit = [&](EntityId e) {
            if (visited[e]) return;
            visited[e] = 1;
            for (auto p : incident[e]) {
                if (!taken[p]) frontier.push_back(p);
            }
        };

        while (selected < target) {
            // Drop stale frontier entries.
            frontier.erase(std::remove_if(frontier.begin(), frontier.end(),
                                          [&](std::size_t p) { return taken[p] != 0; }),
                           frontier.end());
            if (frontier.empty()) {
                // Component exhausted (or first step): restart from an unvisited head.
                std::vector<EntityId> fresh;
                for (auto h : heads) {
                    if (!visited[h]) fresh.push_back(h);
                }
                if (fresh.empty()) break;
                visit(fresh[rng.below(fresh.size())]);
                continue;
            }
            const std::size_t pick = static_cast<std::size_t>(rng.below(frontier.size()));
            const std::size_t pos = frontier[pick];
            taken[pos] = 1;
            ++selected;
            visit(g.triples()[pos].head);
            visit(g.triples()[pos].tail);
        }

        std::vector<std::size_t> positions;
        for (std::size_t i = 0; i < total; ++i) {
            if (taken[i]) positions.push_back(i);
        }
        std::string id = g.graph_id().empty() ? std::string("graph") : g.graph_id();
        id += "_sub" + std::to_string(k);
        out.push_back(induced_subgraph(g, positions, std::move(id)));
    }
    return out;
}

}  // namespace kgqa
