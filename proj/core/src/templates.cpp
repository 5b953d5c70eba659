#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "kgqa/error.hpp"
#include "kgqa/qa.hpp"

namespace kgqa {

namespace {

const std::set<std::string> kKnownSlots = {"step", "entity", "product"};

}  // namespace

std::vector<TemplatePart> QuestionTemplate::parts() const {
    std::vector<TemplatePart> out;
    std::string literal;
    std::size_t i = 0;
    while (i < pattern.size()) {
        if (pattern[i] == '{') {
            const auto close = pattern.find('}', i);
            if (close == std::string::npos) {
                throw ConfigError("template '" + template_id + "': unterminated slot");
            }
            if (!literal.empty()) out.push_back({false, std::exchange(literal, {})});
            out.push_back({true, pattern.substr(i + 1, close - i - 1)});
            i = close + 1;
        } else {
            literal += pattern[i++];
        }
    }
    if (!literal.empty()) out.push_back({false, literal});
    return out;
}

std::vector<std::string> QuestionTemplate::slots() const {
    std::vector<std::string> out;
    for (const auto& p : parts()) {
        if (p.is_slot) out.push_back(p.text);
    }
    return out;
}

std::string QuestionTemplate::anchor_slot() const {
    const auto s = slots();
    for (const char* name : {"step", "entity", "product"}) {
        if (std::find(s.begin(), s.end(), name) != s.end()) return name;
    }
    throw ConfigError("template '" + template_id + "' has no anchor slot");
}

std::vector<std::string> QuestionTemplate::question_relations() const {
    if (multi_hop()) return find_program(program).relations;
    return {relation};
}

std::string QuestionTemplate::instantiate(const std::map<std::string, std::string>& bindings) const {
    std::string out;
    for (const auto& p : parts()) {
        if (!p.is_slot) {
            out += p.text;
            continue;
        }
        auto it = bindings.find(p.text);
        if (it == bindings.end()) {
            throw ArgumentError("template '" + template_id + "': slot {" + p.text + "} unbound");
        }
        out += it->second;
    }
    return out;
}

void QuestionTemplate::validate() const {
    if (template_id.empty()) throw ConfigError("template without template_id");
    if (relation.empty() == program.empty()) {
        throw ConfigError("template '" + template_id +
                          "' must set exactly one of relation or program");
    }
    if (multi_hop()) {
        try {
            find_program(program);
        } catch (const ArgumentError& e) {
            throw ConfigError("template '" + template_id + "': " + e.what());
        }
    }
    std::set<std::string> seen;
    for (const auto& s : slots()) {
        if (!kKnownSlots.count(s)) {
            throw ConfigError("template '" + template_id + "': unknown slot {" + s + "}");
        }
        if (!seen.insert(s).second) {
            throw ConfigError("template '" + template_id + "': slot {" + s + "} repeated");
        }
    }
    anchor_slot();
}

std::vector<QuestionTemplate> default_template_bank() {
    using C = Category;
    struct Row {
        const char* id;
        C category;
        const char* pattern;
        const char* relation;
        const char* program;
    };
    static const Row rows[] = {
        {"action_1", C::Action, "What action is performed in {step} of the {product}?", "has_action", ""},
        {"action_2", C::Action, "What action is done by {step} of the {product} ?", "has_action", ""},
        {"action_3", C::Action, "What action does {step} of the {product} carry out?", "has_action", ""},
        {"tools_1", C::Tools, "What tool is used in {step} of the {product} ?", "uses_tool", ""},
        {"tools_2", C::Tools, "Which tool is utilized by {step} of the {product} ?", "uses_tool", ""},
        {"tools_3", C::Tools, "Can you name the tools used by {step} of the {product} ?", "uses_tool", ""},
        {"workspace_1", C::Workspace, "To what position does {step} of the {product} act?", "acts_to", ""},
        {"workspace_2", C::Workspace, "Where does {step} of the {product} act to?", "acts_to", ""},
        {"workspace_3", C::Workspace, "To which location does {step} of the {product} act?", "acts_to", ""},
        {"detail_1", C::Detail, "What detail does {step} of the {product} provide?", "has_detail", ""},
        {"detail_2", C::Detail, "What detail is given for {step} of the {product}?", "has_detail", ""},
        {"detail_3", C::Detail, "What detail is associated with {step} of the {product} ?", "has_detail", ""},
        {"parts_sequence_1", C::PartsSequence,
         "List the parts and tools used in {step} of the {product}, in the order they are used.", "",
         "step_parts_tools"},
        {"parts_sequence_2", C::PartsSequence,
         "In {step} of the {product}, what are the parts and tools involved sequentially?", "",
         "step_parts_tools"},
        {"parts_sequence_3", C::PartsSequence,
         "Identify the sequential parts and tools used in {step} of the {product}.", "",
         "step_parts_tools"},
        {"attributes_1", C::Attributes, "What attribute does {entity} have?", "has_attribute", ""},
        {"attributes_2", C::Attributes, "Which attribute describes {entity}?", "has_attribute", ""},
        {"attributes_3", C::Attributes, "What is the attribute of {entity}?", "has_attribute", ""},
        {"subassembly_1", C::Subassembly, "Which subassembly does {step} of the {product} produce?", "produces", ""},
        {"subassembly_2", C::Subassembly, "What subassembly results from {step} of the {product}?", "produces", ""},
        {"subassembly_3", C::Subassembly, "Name the subassembly produced by {step} of the {product}.", "produces", ""},
        {"assembly_1", C::Assembly, "List all parts and tools used to assemble the {product}, in order.", "",
         "product_parts_tools"},
        {"assembly_2", C::Assembly, "In what order are the parts and tools used to assemble the {product}?", "",
         "product_parts_tools"},
        {"assembly_3", C::Assembly, "Give the full sequence of parts and tools for assembling the {product}.", "",
         "product_parts_tools"},
    };
    std::vector<QuestionTemplate> bank;
    for (const auto& r : rows) {
        bank.push_back({r.id, r.category, r.pattern, r.relation, r.program});
    }
    return bank;
}

std::string templates_to_json(const std::vector<QuestionTemplate>& bank, int indent) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& t : bank) {
        nlohmann::ordered_json j;
        j["template_id"] = t.template_id;
        j["category"] = std::string(to_string(t.category));
        j["pattern"] = t.pattern;
        if (!t.relation.empty()) j["relation"] = t.relation;
        if (!t.program.empty()) j["program"] = t.program;
        arr.push_back(std::move(j));
    }
    return arr.dump(indent);
}

std::vector<QuestionTemplate> templates_from_json(std::string_view text) {
    std::vector<QuestionTemplate> bank;
    try {
        const auto arr = nlohmann::json::parse(text);
        if (!arr.is_array()) throw ConfigError("template bank must be a JSON list");
        for (const auto& j : arr) {
            QuestionTemplate t;
            t.template_id = j.at("template_id").get<std::string>();
            t.category = category_from_string(j.at("category").get<std::string>());
            t.pattern = j.at("pattern").get<std::string>();
            t.relation = j.value("relation", std::string{});
            t.program = j.value("program", std::string{});
            t.validate();
            bank.push_back(std::move(t));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("template bank: ") + e.what());
    } catch (const LookupError& e) {
        throw ConfigError(std::string("template bank: ") + e.what());
    }
    std::set<std::string> ids;
    for (const auto& t : bank) {
        if (!ids.insert(t.template_id).second) {
            throw ConfigError("duplicate template_id '" + t.template_id + "'");
        }
    }
    return bank;
}

std::vector<QuestionTemplate> load_template_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return templates_from_json(ss.str());
}

const QuestionTemplate& find_template(const std::vector<QuestionTemplate>& bank,
                                      std::string_view template_id) {
    for (const auto& t : bank) {
        if (t.template_id == template_id) return t;
    }
    throw LookupError("unknown template '" + std::string(template_id) + "'");
}

}  // namespace kgqa
