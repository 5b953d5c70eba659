#include <algorithm>
#include <cctype>

#include "kgqa/error.hpp"
#include "kgqa/qa.hpp"

namespace kgqa {

std::string normalize_question(std::string_view text) {
    std::string out;
    bool pending_space = false;
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            pending_space = !out.empty();
            continue;
        }
        const bool punct = c == '?' || c == ',' || c == '.' || c == '!' || c == ';' || c == ':';
        if (pending_space && !punct) out += ' ';
        pending_space = false;
        out += c;
    }
    return out;
}

std::size_t edit_distance(std::string_view a, std::string_view b) {
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

namespace {

bool iequal(std::string_view a, std::string_view b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::tolower(static_cast<unsigned char>(a[i])) !=
            std::tolower(static_cast<unsigned char>(b[i]))) {
            return false;
        }
    }
    return true;
}

struct Matcher {
    const std::vector<TemplatePart>& parts;
    std::string_view text;
    const KnowledgeGraph& g;
    std::map<std::string, std::string> bindings;

    bool run(std::size_t part, std::size_t pos) {
        if (part == parts.size()) return pos == text.size();
        const auto& p = parts[part];
        if (!p.is_slot) {
            if (pos + p.text.size() > text.size()) return false;
            if (!iequal(text.substr(pos, p.text.size()), p.text)) return false;
            return run(part + 1, pos + p.text.size());
        }
        for (std::size_t end = pos + 1; end <= text.size(); ++end) {
            const auto candidate = text.substr(pos, end - pos);
            if (!g.find_entity(candidate)) continue;
            bindings[p.text] = std::string(candidate);
            if (run(part + 1, end)) return true;
        }
        bindings.erase(p.text);
        return false;
    }
};

std::vector<TemplatePart> normalized_parts(const QuestionTemplate& t) {
    QuestionTemplate copy = t;
    copy.pattern = normalize_question(t.pattern);
    return copy.parts();
}

}  // namespace

std::size_t nearest_template(std::string_view text, const std::vector<QuestionTemplate>& templates) {
    if (templates.empty()) throw ArgumentError("empty template bank");
    const auto norm = normalize_question(text);
    std::size_t best = 0;
    std::size_t best_dist = SIZE_MAX;
    for (std::size_t i = 0; i < templates.size(); ++i) {
        const auto d = edit_distance(norm, normalize_question(templates[i].pattern));
        if (d < best_dist) {
            best_dist = d;
            best = i;
        }
    }
    return best;
}

ParsedQuestion parse_question(std::string_view text, const std::vector<QuestionTemplate>& templates,
                              const KnowledgeGraph& g) {
    if (templates.empty()) throw ArgumentError("empty template bank");
    const auto norm = normalize_question(text);
    std::optional<ParsedQuestion> best;
    std::size_t best_literal = 0;
    for (const auto& t : templates) {
        const auto parts = normalized_parts(t);
        Matcher m{parts, norm, g, {}};
        if (!m.run(0, 0)) continue;
        std::size_t literal = 0;
        for (const auto& p : parts) {
            if (!p.is_slot) literal += p.text.size();
        }
        if (!best || literal > best_literal) {
            best = ParsedQuestion{t.template_id, std::move(m.bindings)};
            best_literal = literal;
        }
    }
    if (!best) {
        const auto& near = templates[nearest_template(text, templates)];
        throw LookupError("unrecognized question; nearest template '" + near.template_id +
                          "': " + near.pattern);
    }
    return *best;
}

}  // namespace kgqa
