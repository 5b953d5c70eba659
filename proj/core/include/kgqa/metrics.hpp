#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "kgqa/graph.hpp"
#include "kgqa/qa.hpp"

namespace kgqa {

using Sequence = std::vector<std::string>;

bool exact_match(const Sequence& pred, const Sequence& gold);
// LCS length / max(|pred|, |gold|); 1 when both are empty.
double nlcs(const Sequence& pred, const Sequence& gold);
std::size_t lcs_length(const Sequence& a, const Sequence& b);
// Multiset min-count sum over max-count sum; 1 when both are empty.
double wjaccard(const Sequence& pred, const Sequence& gold);

struct StepRecord {
    bool was_optimal = false;
};
using EpisodeSteps = std::vector<StepRecord>;

// Optimal steps over all steps of all episodes.
double opr(const std::vector<EpisodeSteps>& episodes);
double average_step(const std::vector<EpisodeSteps>& episodes);

// Runs of [A-Za-z0-9_] and every other non-space character on its own.
std::vector<std::string> tokenize(std::string_view text);
std::size_t count_tokens(std::string_view text);

// One "(head, relation, tail)" line per triple.
std::string serialize_text_triples(const KnowledgeGraph& g);
// m graph tokens plus the instruction tokens (the graph placeholder itself
// is not counted).
std::size_t graph_context_length(std::size_t num_symbols, std::string_view instruction);
std::size_t text_triple_context_length(const KnowledgeGraph& g);

struct EvalItem {
    std::string question;
    std::string graph_id;
    Category category = Category::Action;
    int hops = 1;
    Sequence predicted;
    Sequence gold;
    bool exact = false;
    double nlcs = 0;
    double wjaccard = 0;
    double infer_ms = 0;
};

struct CategoryScore {
    std::size_t count = 0;
    double accuracy = 0;
    double nlcs = 0;
    double wjaccard = 0;
};

struct EvalResult {
    double accuracy = 0;
    double nlcs = 0;
    double wjaccard = 0;
    double mean_infer_ms = 0;
    double mean_context_length = 0;
    std::map<std::string, CategoryScore> per_category;
    std::vector<EvalItem> items;
};

EvalItem score_item(const QAPair& qa, Sequence predicted, double infer_ms = 0);
// Aggregates items; an empty list gives an all-zero result.
EvalResult summarize(std::vector<EvalItem> items, double mean_context_length = 0);
std::string eval_report_json(const EvalResult& r, bool include_items = true, int indent = 2);

}  // namespace kgqa
