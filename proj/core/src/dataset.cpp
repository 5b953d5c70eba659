#include <algorithm>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "kgqa/error.hpp"
#include "kgqa/qa.hpp"
#include "kgqa/rng.hpp"

namespace kgqa {

void validate_qa(const QAPair& qa) {
    if (qa.question.empty()) throw ValidationError("QA pair has an empty question");
    if (qa.answer.empty()) throw ValidationError("QA pair has an empty answer");
    if (qa.hops < 1) throw ValidationError("QA pair hop count must be positive");
    if (qa.hops == 1 && qa.answer.size() != 1) {
        throw ValidationError("single-hop QA pair must have exactly one answer");
    }
    if (qa.anchor.empty()) throw ValidationError("QA pair has an empty anchor");
}

void validate_qa(const QAPair& qa, const KnowledgeGraph& g) {
    validate_qa(qa);
    if (!g.find_entity(qa.anchor)) {
        throw ValidationError("anchor '" + qa.anchor + "' not in graph '" + g.graph_id() + "'");
    }
    for (const auto& a : qa.answer) {
        if (!g.find_entity(a)) {
            throw ValidationError("answer '" + a + "' not in graph '" + g.graph_id() + "'");
        }
    }
}

namespace {

bool template_applies(const QuestionTemplate& t, const KnowledgeGraph& g) {
    if (!t.multi_hop()) return g.find_relation(t.relation).has_value();
    const auto& p = find_program(t.program);
    if (!p.via.empty() && !g.find_relation(p.via)) return false;
    for (const auto& r : p.relations) {
        if (g.find_relation(r)) return true;
    }
    return false;
}

}  // namespace

std::vector<QAPair> generate_dataset(const std::vector<KnowledgeGraph>& graphs,
                                     const std::vector<QuestionTemplate>& templates,
                                     std::uint64_t seed) {
    for (const auto& t : templates) {
        t.validate();
        bool used = false;
        for (const auto& g : graphs) used = used || template_applies(t, g);
        if (!used && !graphs.empty()) {
            throw ConfigError("template '" + t.template_id +
                              "' references a relation or program absent from every graph");
        }
    }

    std::vector<QAPair> out;
    for (const auto& g : graphs) {
        for (const auto& t : templates) {
            if (!template_applies(t, g)) continue;
            const auto anchor_slot = t.anchor_slot();
            const auto slots = t.slots();
            const bool needs_product =
                anchor_slot != "product" &&
                std::find(slots.begin(), slots.end(), "product") != slots.end();
            for (const auto& anchor : g.entities()) {
                auto answer = oracle_answer(g, t, anchor);
                if (answer.empty()) continue;
                if (!t.multi_hop() && answer.size() != 1) continue;
                std::map<std::string, std::string> bindings{{anchor_slot, anchor}};
                if (needs_product) {
                    auto product = product_of(g, anchor);
                    if (!product) continue;
                    bindings["product"] = *product;
                }
                QAPair qa;
                qa.question = t.instantiate(bindings);
                qa.category = t.category;
                qa.hops = t.multi_hop() ? 2 : 1;
                qa.anchor = anchor;
                qa.answer = std::move(answer);
                qa.graph_id = g.graph_id();
                qa.template_id = t.template_id;
                out.push_back(std::move(qa));
            }
        }
    }
    Rng rng(derive_seed(seed, "dataset-shuffle"));
    rng.shuffle(out);
    return out;
}

std::string qa_to_json_line(const QAPair& qa) {
    nlohmann::ordered_json j;
    j["question"] = qa.question;
    j["category"] = std::string(to_string(qa.category));
    j["hops"] = qa.hops;
    j["anchor"] = qa.anchor;
    j["answer"] = qa.answer;
    j["graph_id"] = qa.graph_id;
    j["template_id"] = qa.template_id;
    return j.dump();
}

QAPair qa_from_json_line(std::string_view line) {
    try {
        const auto j = nlohmann::json::parse(line);
        QAPair qa;
        qa.question = j.at("question").get<std::string>();
        qa.category = category_from_string(j.at("category").get<std::string>());
        qa.hops = j.at("hops").get<int>();
        qa.anchor = j.at("anchor").get<std::string>();
        qa.answer = j.at("answer").get<std::vector<std::string>>();
        qa.graph_id = j.at("graph_id").get<std::string>();
        qa.template_id = j.at("template_id").get<std::string>();
        validate_qa(qa);
        return qa;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("dataset line: ") + e.what());
    }
}

std::string dataset_to_jsonl(const std::vector<QAPair>& dataset) {
    std::string out;
    for (const auto& qa : dataset) {
        out += qa_to_json_line(qa);
        out += '\n';
    }
    return out;
}

std::vector<QAPair> dataset_from_jsonl(std::string_view text) {
    std::vector<QAPair> out;
    std::size_t start = 0;
    std::size_t line_no = 0;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        const auto line = text.substr(start, end - start);
        start = end + 1;
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
        try {
            out.push_back(qa_from_json_line(line));
        } catch (const Error& e) {
            throw ParseError(line_no, e.what());
        }
    }
    return out;
}

std::vector<QAPair> load_dataset_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return dataset_from_jsonl(ss.str());
}

void save_dataset_file(const std::vector<QAPair>& dataset, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << dataset_to_jsonl(dataset);
}

std::string render_instruction(std::string_view question) {
    if (question.empty()) throw ValidationError("cannot render an empty question");
    std::string out;
    out += kKgStartToken;
    out += kGraphPlaceholder;
    out += kKgEndToken;
    out += "\n# Task: Based on the assembly knowledge graph information above, answer the question\n";
    out += "# Question ";
    out += question;
    return out;
}

std::string render_instruction(const QAPair& qa) {
    validate_qa(qa);
    return render_instruction(qa.question);
}

}  // namespace kgqa
