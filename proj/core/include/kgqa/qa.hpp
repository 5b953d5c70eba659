#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kgqa/graph.hpp"

namespace kgqa {

enum class Category {
    Action,
    Tools,
    Workspace,
    Detail,
    PartsSequence,
    Attributes,
    Subassembly,
    Assembly,
};

inline constexpr int kNumCategories = 8;

std::string_view to_string(Category c);
Category category_from_string(std::string_view name);  // throws LookupError
const std::vector<Category>& all_categories();

// Relation that links a product to its steps; used to fill {product} slots.
inline constexpr std::string_view kHasStepRelation = "has_step";

// A named relation-sequence walk for multi-hop questions. When `via` is set,
// the anchor is first expanded into the tails of its `via` edges (in triple
// order) and the walk runs from each of them in turn.
struct TraversalProgram {
    std::string name;
    std::vector<std::string> relations;
    std::string via;
};

const std::vector<TraversalProgram>& registered_programs();
const TraversalProgram& find_program(std::string_view name);  // throws ArgumentError

// Tails of all (anchor, relation, *) triples in triple order.
std::vector<std::string> traverse_single_hop(const KnowledgeGraph& g, std::string_view anchor,
                                             std::string_view relation);
std::vector<std::string> traverse_multi_hop(const KnowledgeGraph& g, std::string_view anchor,
                                            const TraversalProgram& program);
std::vector<std::string> traverse_multi_hop(const KnowledgeGraph& g, std::string_view anchor,
                                            std::string_view program);

// ---- templates ---------------------------------------------------------------

struct TemplatePart {
    bool is_slot;
    std::string text;  // literal text, or the slot name without braces
};

struct QuestionTemplate {
    std::string template_id;
    Category category = Category::Action;
    std::string pattern;   // e.g. "What tool is used in {step} of the {product} ?"
    std::string relation;  // single-hop target relation
    std::string program;   // multi-hop traversal program

    bool multi_hop() const { return !program.empty(); }
    // Split of the pattern into literals and slots; validates the slot rules.
    std::vector<TemplatePart> parts() const;
    std::vector<std::string> slots() const;
    // The slot whose binding is the question's anchor entity.
    std::string anchor_slot() const;
    // Relations whose graph tokens condition the question.
    std::vector<std::string> question_relations() const;
    std::string instantiate(const std::map<std::string, std::string>& bindings) const;
    void validate() const;
};

std::vector<QuestionTemplate> default_template_bank();
std::string templates_to_json(const std::vector<QuestionTemplate>& bank, int indent = 2);
std::vector<QuestionTemplate> templates_from_json(std::string_view text);
std::vector<QuestionTemplate> load_template_file(const std::string& path);
const QuestionTemplate& find_template(const std::vector<QuestionTemplate>& bank,
                                      std::string_view template_id);

// ---- QA pairs ------------------------------------------------------------------

struct QAPair {
    std::string question;
    Category category = Category::Action;
    int hops = 1;
    std::string anchor;
    std::vector<std::string> answer;
    std::string graph_id;
    std::string template_id;

    friend bool operator==(const QAPair&, const QAPair&) = default;
};

void validate_qa(const QAPair& qa);
void validate_qa(const QAPair& qa, const KnowledgeGraph& g);

// Product entity that owns `entity` via has_step, directly or through a step.
std::optional<std::string> product_of(const KnowledgeGraph& g, std::string_view entity);

// Answer from the graph for a template instantiated at `anchor`.
std::vector<std::string> oracle_answer(const KnowledgeGraph& g, const QuestionTemplate& t,
                                       std::string_view anchor);

// One QAPair per (graph, anchor, template) with a non-empty oracle answer;
// single-hop templates only emit where the answer is a single entity. The
// result is shuffled with `seed`.
std::vector<QAPair> generate_dataset(const std::vector<KnowledgeGraph>& graphs,
                                     const std::vector<QuestionTemplate>& templates,
                                     std::uint64_t seed);

std::string qa_to_json_line(const QAPair& qa);
QAPair qa_from_json_line(std::string_view line);
std::string dataset_to_jsonl(const std::vector<QAPair>& dataset);
std::vector<QAPair> dataset_from_jsonl(std::string_view text);
std::vector<QAPair> load_dataset_file(const std::string& path);
void save_dataset_file(const std::vector<QAPair>& dataset, const std::string& path);

inline constexpr std::string_view kKgStartToken = "<kg_start_token>";
inline constexpr std::string_view kKgEndToken = "<kg_end_token>";
inline constexpr std::string_view kGraphPlaceholder = "{GRAPH}";

std::string render_instruction(const QAPair& qa);
std::string render_instruction(std::string_view question);

// ---- question parsing --------------------------------------------------------

struct ParsedQuestion {
    std::string template_id;
    std::map<std::string, std::string> bindings;

    friend bool operator==(const ParsedQuestion&, const ParsedQuestion&) = default;
};

// Whitespace-collapsed, trimmed text with no space before ?,.!;:
std::string normalize_question(std::string_view text);

// Longest literal match whose slots bind to entities of g; ties go to the
// earlier template. Throws LookupError naming the nearest template.
ParsedQuestion parse_question(std::string_view text, const std::vector<QuestionTemplate>& templates,
                              const KnowledgeGraph& g);

// Index of the template with the smallest edit distance to `text`.
std::size_t nearest_template(std::string_view text, const std::vector<QuestionTemplate>& templates);

std::size_t edit_distance(std::string_view a, std::string_view b);

}  // namespace kgqa
