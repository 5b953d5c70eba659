#include "kgqa/text_embed.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "kgqa/checkpoint.hpp"
#include "kgqa/error.hpp"
#include "kgqa/rng.hpp"

namespace kgqa {

Vector embed_label_builtin(std::string_view text, int d_sem, std::uint64_t seed) {
    if (text.empty()) throw ArgumentError("cannot embed empty text");
    if (d_sem <= 0) throw ArgumentError("embedding dimension must be positive");
    // Boundary markers so that every label yields at least one trigram.
    std::string padded;
    padded.reserve(text.size() + 2);
    padded += '\x02';
    padded += text;
    padded += '\x03';
    const std::uint64_t bucket_basis = splitmix64(seed);
    const std::uint64_t sign_basis = splitmix64(seed ^ 0xa5a5a5a5a5a5a5a5ULL);
    Vector v = Vector::Zero(d_sem);
    for (std::size_t i = 0; i + 3 <= padded.size(); ++i) {
        const std::string_view gram(padded.data() + i, 3);
        const auto bucket = fnv1a64(gram, bucket_basis) % static_cast<std::uint64_t>(d_sem);
        const double sign = (splitmix64(fnv1a64(gram, sign_basis)) & 1) ? 1.0 : -1.0;
        v[static_cast<Eigen::Index>(bucket)] += sign;
    }
    const double norm = v.norm();
    if (norm == 0.0) {
        // Bucket collisions cancelled out; fall back to the first trigram's bucket.
        v[static_cast<Eigen::Index>(fnv1a64(std::string_view(padded.data(), 3), bucket_basis) %
                                    static_cast<std::uint64_t>(d_sem))] = 1.0;
        return v;
    }
    return v / norm;
}

double cosine_similarity(const Vector& a, const Vector& b) {
    const double na = a.norm();
    const double nb = b.norm();
    if (na == 0 || nb == 0) return 0.0;
    return a.dot(b) / (na * nb);
}

SemanticTable SemanticTable::builtin(const std::vector<const KnowledgeGraph*>& graphs, int d_sem,
                                     std::uint64_t seed) {
    SemanticTable table(d_sem, SemanticSource::Builtin);
    for (const auto* g : graphs) {
        for (const auto& e : g->entities()) {
            if (!table.contains(e)) table.insert(e, embed_label_builtin(e, d_sem, seed));
        }
        for (const auto& r : g->relations()) {
            if (!table.contains(r)) table.insert(r, embed_label_builtin(r, d_sem, seed));
        }
    }
    return table;
}

void SemanticTable::insert(const std::string& name, Vector v) {
    if (v.size() != d_sem_) {
        throw FormatError("vector for '" + name + "' has dimension " + std::to_string(v.size()) +
                          ", expected " + std::to_string(d_sem_));
    }
    if (!v.allFinite()) throw FormatError("vector for '" + name + "' is not finite");
    if (vectors_.count(name)) throw FormatError("duplicate semantic entry '" + name + "'");
    names_.push_back(name);
    vectors_.emplace(name, std::move(v));
}

bool SemanticTable::contains(std::string_view name) const {
    return vectors_.count(std::string(name)) > 0;
}

const Vector& SemanticTable::at(std::string_view name) const {
    auto it = vectors_.find(std::string(name));
    if (it == vectors_.end()) throw LookupError("uncovered symbol: " + std::string(name));
    return it->second;
}

std::vector<std::string> SemanticTable::uncovered(const KnowledgeGraph& g) const {
    std::vector<std::string> out;
    for (const auto& e : g.entities()) {
        if (!contains(e)) out.push_back(e);
    }
    for (const auto& r : g.relations()) {
        if (!contains(r)) out.push_back(r);
    }
    return out;
}

SemanticTable decode_semantic_table(const std::string& bytes) {
    const auto nl = bytes.find('\n');
    if (nl == std::string::npos) throw FormatError("semantic file has no header line");
    int d_sem = 0;
    std::size_t count = 0;
    std::vector<std::string> names;
    try {
        const auto head = nlohmann::json::parse(bytes.substr(0, nl));
        d_sem = head.at("d_sem").get<int>();
        count = head.at("count").get<std::size_t>();
        names = head.at("names").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("semantic header: ") + e.what());
    }
    if (d_sem <= 0) throw FormatError("semantic header: d_sem must be positive");
    if (names.size() != count) {
        throw FormatError("semantic header: count " + std::to_string(count) + " but " +
                          std::to_string(names.size()) + " names");
    }
    const std::size_t expected = count * static_cast<std::size_t>(d_sem) * 4;
    const std::size_t available = bytes.size() - (nl + 1);
    if (available != expected) {
        throw FormatError("semantic blob has " + std::to_string(available) + " bytes, expected " +
                          std::to_string(expected));
    }
    const Matrix m = read_float32_le(bytes, nl + 1, static_cast<Eigen::Index>(count), d_sem);
    SemanticTable table(d_sem, SemanticSource::File);
    for (std::size_t i = 0; i < count; ++i) {
        table.insert(names[i], m.row(static_cast<Eigen::Index>(i)).transpose());
    }
    return table;
}

std::string encode_semantic_table(const SemanticTable& table) {
    nlohmann::ordered_json head;
    head["d_sem"] = table.dim();
    head["count"] = table.size();
    head["names"] = table.names();
    std::string out = head.dump();
    out += '\n';
    Matrix m(static_cast<Eigen::Index>(table.size()), table.dim());
    for (std::size_t i = 0; i < table.size(); ++i) {
        m.row(static_cast<Eigen::Index>(i)) = table.at(table.names()[i]).transpose();
    }
    append_float32_le(out, m);
    return out;
}

SemanticTable load_semantic_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return decode_semantic_table(ss.str());
}

void save_semantic_file(const SemanticTable& table, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << encode_semantic_table(table);
}

EmbeddingMatrix assemble_semantic_matrix(const KnowledgeGraph& g, const OrderedDictionary& dict,
                                         const SemanticTable& table) {
    if (!dict.matches(g)) throw ArgumentError("dictionary does not match graph");
    const auto missing = table.uncovered(g);
    if (!missing.empty()) {
        std::string list;
        for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
        throw LookupError("uncovered symbol(s): " + list);
    }
    EmbeddingMatrix out;
    out.values.resize(static_cast<Eigen::Index>(dict.size()), table.dim());
    const auto names = dict.names(g);
    for (std::size_t i = 0; i < names.size(); ++i) {
        out.values.row(static_cast<Eigen::Index>(i)) = table.at(names[i]).transpose();
    }
    return out;
}

}  // namespace kgqa
