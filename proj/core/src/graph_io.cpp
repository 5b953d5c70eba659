#include <fstream>
#include <sstream>

#include "json.hpp"
#include "kgqa/error.hpp"
#include "kgqa/graph.hpp"

namespace kgqa {

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find('\t', start);
        if (pos == std::string_view::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return fields;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

bool ends_with(const std::string& s, std::string_view suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

KnowledgeGraph parse_triples(std::string_view text, std::string graph_id) {
    KnowledgeGraph g(std::move(graph_id));
    std::unordered_map<std::string, std::size_t> first_line;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(start, end - start);
        start = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.find_first_not_of(" \t") == std::string_view::npos || line.front() == '#') continue;

        const auto fields = split_tabs(line);
        if (fields.size() != 3) {
            throw ParseError(line_no, "expected 3 tab-separated fields, found " +
                                          std::to_string(fields.size()));
        }
        for (const auto& f : fields) {
            if (f.empty()) throw ParseError(line_no, "empty field");
        }
        std::string key;
        key.append(fields[0]).append(1, '\t').append(fields[1]).append(1, '\t').append(fields[2]);
        if (auto it = first_line.find(key); it != first_line.end()) {
            throw ValidationError("duplicate triple on lines " + std::to_string(it->second) +
                                  " and " + std::to_string(line_no));
        }
        first_line.emplace(std::move(key), line_no);
        g.add_triple(fields[0], fields[1], fields[2]);
    }
    return g;
}

std::string serialize_triples(const KnowledgeGraph& g) {
    std::string out;
    for (const auto& t : g.triples()) {
        out += g.entity_name(t.head);
        out += '\t';
        out += g.relation_name(t.relation);
        out += '\t';
        out += g.entity_name(t.tail);
        out += '\n';
    }
    return out;
}

std::string graph_to_json(const KnowledgeGraph& g, int indent) {
    nlohmann::ordered_json j;
    j["graph_id"] = g.graph_id();
    j["entities"] = g.entities();
    j["relations"] = g.relations();
    auto triples = nlohmann::ordered_json::array();
    for (const auto& t : g.triples()) triples.push_back({t.head, t.relation, t.tail});
    j["triples"] = std::move(triples);
    return j.dump(indent);
}

KnowledgeGraph graph_from_json(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("graph JSON: ") + e.what());
    }
    try {
        std::vector<Triple> triples;
        for (const auto& t : j.at("triples")) {
            if (!t.is_array() || t.size() != 3) throw FormatError("triple must be [h, r, t]");
            triples.push_back({t[0].get<EntityId>(), t[1].get<RelationId>(), t[2].get<EntityId>()});
        }
        return KnowledgeGraph::from_parts(j.value("graph_id", std::string{}),
                                          j.at("entities").get<std::vector<std::string>>(),
                                          j.at("relations").get<std::vector<std::string>>(),
                                          std::move(triples));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("graph JSON: ") + e.what());
    }
}

KnowledgeGraph load_graph_file(const std::string& path) {
    const std::string text = read_file(path);
    if (ends_with(path, ".json")) return graph_from_json(text);
    std::string stem = path;
    if (auto slash = stem.find_last_of('/'); slash != std::string::npos) stem = stem.substr(slash + 1);
    if (auto dot = stem.find_last_of('.'); dot != std::string::npos) stem = stem.substr(0, dot);
    return parse_triples(text, stem);
}

void save_graph_json(const KnowledgeGraph& g, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << graph_to_json(g, 2) << '\n';
}

}  // namespace kgqa
