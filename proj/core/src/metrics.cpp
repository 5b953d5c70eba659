#include "kgqa/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_map>

#include "json.hpp"
#include "kgqa/error.hpp"

namespace kgqa {

bool exact_match(const Sequence& pred, const Sequence& gold) { return pred == gold; }

std::size_t lcs_length(const Sequence& a, const Sequence& b) {
    std::vector<std::size_t> prev(b.size() + 1, 0);
    std::vector<std::size_t> cur(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

double nlcs(const Sequence& pred, const Sequence& gold) {
    if (pred.empty() && gold.empty()) return 1.0;
    const auto denom = std::max(pred.size(), gold.size());
    return static_cast<double>(lcs_length(pred, gold)) / static_cast<double>(denom);
}

double wjaccard(const Sequence& pred, const Sequence& gold) {
    if (pred.empty() && gold.empty()) return 1.0;
    std::unordered_map<std::string, std::pair<std::size_t, std::size_t>> counts;
    for (const auto& x : pred) ++counts[x].first;
    for (const auto& x : gold) ++counts[x].second;
    std::size_t lo = 0;
    std::size_t hi = 0;
    for (const auto& [_, c] : counts) {
        lo += std::min(c.first, c.second);
        hi += std::max(c.first, c.second);
    }
    return static_cast<double>(lo) / static_cast<double>(hi);
}

double opr(const std::vector<EpisodeSteps>& episodes) {
    std::size_t total = 0;
    std::size_t optimal = 0;
    for (const auto& ep : episodes) {
        total += ep.size();
        for (const auto& s : ep) optimal += s.was_optimal ? 1 : 0;
    }
    if (total == 0) throw ArgumentError("OPR is undefined without operations");
    return static_cast<double>(optimal) / static_cast<double>(total);
}

double average_step(const std::vector<EpisodeSteps>& episodes) {
    if (episodes.empty()) throw ArgumentError("average step needs at least one episode");
    std::size_t total = 0;
    for (const auto& ep : episodes) {
        if (ep.empty()) throw ArgumentError("episode with zero steps");
        total += ep.size();
    }
    return static_cast<double>(total) / static_cast<double>(episodes.size());
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    std::string word;
    auto is_word = [](unsigned char c) { return std::isalnum(c) || c == '_'; };
    for (const char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (is_word(c)) {
            word += ch;
            continue;
        }
        if (!word.empty()) out.push_back(std::move(word)), word.clear();
        if (!std::isspace(c)) out.emplace_back(1, ch);
    }
    if (!word.empty()) out.push_back(std::move(word));
    return out;
}

std::size_t count_tokens(std::string_view text) { return tokenize(text).size(); }

std::string serialize_text_triples(const KnowledgeGraph& g) {
    std::string out;
    for (const auto& t : g.triples()) {
        out += '(';
        out += g.entities()[t.head];
        out += ", ";
        out += g.relations()[t.relation];
        out += ", ";
        out += g.entities()[t.tail];
        out += ")\n";
    }
    return out;
}

std::size_t graph_context_length(std::size_t num_symbols, std::string_view instruction) {
    std::string text(instruction);
    for (auto pos = text.find(kGraphPlaceholder); pos != std::string::npos; pos = text.find(kGraphPlaceholder)) {
        text.replace(pos, kGraphPlaceholder.size(), " ");
    }
    return num_symbols + count_tokens(text);
}

std::size_t text_triple_context_length(const KnowledgeGraph& g) {
    return count_tokens(serialize_text_triples(g));
}

EvalItem score_item(const QAPair& qa, Sequence predicted, double infer_ms) {
    EvalItem it;
    it.question = qa.question;
    it.graph_id = qa.graph_id;
    it.category = qa.category;
    it.hops = qa.hops;
    it.gold = qa.answer;
    it.predicted = std::move(predicted);
    it.exact = exact_match(it.predicted, it.gold);
    it.nlcs = nlcs(it.predicted, it.gold);
    it.wjaccard = wjaccard(it.predicted, it.gold);
    it.infer_ms = infer_ms;
    return it;
}

EvalResult summarize(std::vector<EvalItem> items, double mean_context_length) {
    EvalResult r;
    r.mean_context_length = mean_context_length;
    r.items = std::move(items);
    if (r.items.empty()) return r;
    for (const auto& it : r.items) {
        r.accuracy += it.exact ? 1.0 : 0.0;
        r.nlcs += it.nlcs;
        r.wjaccard += it.wjaccard;
        r.mean_infer_ms += it.infer_ms;
        auto& c = r.per_category[std::string(to_string(it.category))];
        ++c.count;
        c.accuracy += it.exact ? 1.0 : 0.0;
        c.nlcs += it.nlcs;
        c.wjaccard += it.wjaccard;
    }
    const double n = static_cast<double>(r.items.size());
    r.accuracy /= n;
    r.nlcs /= n;
    r.wjaccard /= n;
    r.mean_infer_ms /= n;
    for (auto& [_, c] : r.per_category) {
        const double k = static_cast<double>(c.count);
        c.accuracy /= k;
        c.nlcs /= k;
        c.wjaccard /= k;
    }
    return r;
}

std::string eval_report_json(const EvalResult& r, bool include_items, int indent) {
    nlohmann::ordered_json j;
    j["accuracy"] = r.accuracy;
    j["nlcs"] = r.nlcs;
    j["wjaccard"] = r.wjaccard;
    j["mean_infer_ms"] = r.mean_infer_ms;
    j["mean_context_length"] = r.mean_context_length;
    j["count"] = r.items.size();
    nlohmann::ordered_json per = nlohmann::ordered_json::object();
    for (const auto& [name, c] : r.per_category) {
        per[name] = {{"count", c.count}, {"accuracy", c.accuracy}, {"nlcs", c.nlcs}, {"wjaccard", c.wjaccard}};
    }
    j["per_category"] = per;
    if (include_items) {
        auto arr = nlohmann::ordered_json::array();
        for (const auto& it : r.items) {
            arr.push_back({{"question", it.question},
                           {"graph_id", it.graph_id},
                           {"category", std::string(to_string(it.category))},
                           {"hops", it.hops},
                           {"predicted", it.predicted},
                           {"gold", it.gold},
                           {"exact", it.exact},
                           {"nlcs", it.nlcs},
                           {"wjaccard", it.wjaccard},
                           {"infer_ms", it.infer_ms}});
        }
        j["items"] = arr;
    }
    return j.dump(indent);
}

}  // namespace kgqa
