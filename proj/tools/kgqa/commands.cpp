#include "commands.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "kgqa/alignment.hpp"
#include "kgqa/checkpoint.hpp"
#include "kgqa/encoder.hpp"
#include "kgqa/error.hpp"
#include "kgqa/metrics.hpp"
#include "kgqa/rng.hpp"
#include "kgqa/stack_sim.hpp"
#include "pipeline.hpp"

namespace kgqa::cli {

namespace {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

struct Common {
    std::uint64_t seed = 0;
    std::string out;
    std::string config;
};

// A flag given on the command line wins over the config file, which wins
// over the built-in default.
class Settings {
public:
    Settings(const Config& cfg, std::string section) : cfg_(cfg), section_(std::move(section)) {}

    template <typename T>
    T get(const CLI::Option* opt, const T& flag, const std::string& key, const T& fallback) {
        T v = fallback;
        const std::string full = section_ + "." + key;
        if (opt && opt->count() > 0) {
            v = flag;
        } else if constexpr (std::is_same_v<T, bool>) {
            v = cfg_.get_bool(full, fallback);
        } else if constexpr (std::is_integral_v<T>) {
            v = static_cast<T>(cfg_.get_int(full, static_cast<long long>(fallback)));
        } else if constexpr (std::is_floating_point_v<T>) {
            v = cfg_.get_double(full, fallback);
        } else {
            v = cfg_.get_string(full, fallback);
        }
        resolved_[key] = v;
        return v;
    }

    const ojson& resolved() const noexcept { return resolved_; }

private:
    const Config& cfg_;
    std::string section_;
    ojson resolved_ = ojson::object();
};

std::string read_all(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void require_out(const Common& c) {
    if (c.out.empty()) throw ArgumentError("--out is required");
}

// ---- ingest ------------------------------------------------------------------

struct IngestArgs {
    std::string triples;
    std::string graph_id;
};

int cmd_ingest(const Common& c, const IngestArgs& a, std::ostream& out) {
    require_out(c);
    RunManifest m{"ingest", c.config, c.seed, ojson::object(), {{a.triples, "triples"}}, c.out, ojson::object()};
    const std::string id = a.graph_id.empty() ? fs::path(a.triples).stem().string() : a.graph_id;
    m.params["graph_id"] = id;
    check_inputs(m);
    write_manifest(m);

    const KnowledgeGraph g = parse_triples(read_all(a.triples), id);
    g.validate();
    save_graph_json(g, join_path(c.out, "graph.json"));

    std::map<std::string, std::size_t> per_relation;
    for (const auto& t : g.triples()) ++per_relation[g.relation_name(t.relation)];
    ojson report;
    report["graph_id"] = g.graph_id();
    report["valid"] = true;
    report["entities"] = g.num_entities();
    report["relations"] = g.num_relations();
    report["triples"] = g.num_triples();
    report["triples_per_relation"] = per_relation;
    write_text(join_path(c.out, "report.json"), report.dump(2) + "\n");
    out << report.dump() << "\n";
    return kOk;
}

// ---- split -------------------------------------------------------------------

struct SplitArgs {
    std::string graph;
    std::size_t count = 0;
    std::size_t min_triples = 0;
    CLI::Option* count_opt = nullptr;
    CLI::Option* min_opt = nullptr;
};

int cmd_split(const Common& c, const SplitArgs& a, std::ostream& out) {
    require_out(c);
    RunManifest m{"split", c.config, c.seed, ojson::object(), {{a.graph, "graph"}}, c.out, ojson::object()};
    check_inputs(m);
    const Config cfg = load_config(c.config);
    Settings s(cfg, "split");
    const auto count = s.get<std::size_t>(a.count_opt, a.count, "count", 148);
    const auto min_triples = s.get<std::size_t>(a.min_opt, a.min_triples, "min_triples", 8);
    const std::uint64_t split_seed = derive_seed(c.seed, "split");
    m.seeds["split"] = split_seed;
    m.params = s.resolved();
    write_manifest(m);

    const KnowledgeGraph g = load_graph_file(a.graph);
    const auto subs = split_random_subgraphs(g, count, min_triples, split_seed);
    std::string index;
    for (const auto& sub : subs) {
        const std::string name = sub.graph_id() + ".json";
        save_graph_json(sub, join_path(c.out, name));
        index += name + "\n";
    }
    write_text(join_path(c.out, "subgraphs.txt"), index);
    out << "wrote " << subs.size() << " subgraphs to " << c.out << "\n";
    return kOk;
}

// ---- train-gcn ---------------------------------------------------------------

struct TrainGcnArgs {
    std::string graph;
    int epochs = 0;
    double lr = 0;
    std::string op;
    CLI::Option* epochs_opt = nullptr;
    CLI::Option* lr_opt = nullptr;
    CLI::Option* op_opt = nullptr;
};

int cmd_train_gcn(const Common& c, const TrainGcnArgs& a, std::ostream& out) {
    require_out(c);
    RunManifest m{"train-gcn", c.config, c.seed, ojson::object(), {{a.graph, "graph"}}, c.out, ojson::object()};
    check_inputs(m);
    const Config cfg = load_config(c.config);
    Settings s(cfg, "gcn");
    EncoderTrainConfig ec;
    ec.epochs = s.get(a.epochs_opt, a.epochs, "epochs", ec.epochs);
    ec.lr = s.get(a.lr_opt, a.lr, "lr", ec.lr);
    ec.label_smoothing = s.get<double>(nullptr, 0, "label_smoothing", ec.label_smoothing);
    ec.head_prediction = s.get<bool>(nullptr, false, "head_prediction", ec.head_prediction);
    ec.op = composition_from_string(s.get<std::string>(a.op_opt, a.op, "op", std::string(to_string(ec.op))));
    ec.dims.init_dim = s.get<int>(nullptr, 0, "init_dim", ec.dims.init_dim);
    ec.dims.embed_dim = s.get<int>(nullptr, 0, "embed_dim", ec.dims.embed_dim);
    ec.dims.layers = s.get<int>(nullptr, 0, "layers", ec.dims.layers);
    ec.seed = derive_seed(c.seed, "encoder");
    const std::uint64_t dict_seed = derive_seed(c.seed, "dictionary");
    m.seeds["encoder"] = ec.seed;
    m.seeds["dictionary"] = dict_seed;
    m.params = s.resolved();
    write_manifest(m);

    const KnowledgeGraph g = load_graph_file(a.graph);
    const AugmentedGraph ag(g);
    const auto res = train_encoder(ag, ec);
    const OrderedDictionary dict = build_dictionary(g, dict_seed);
    EncoderCheckpoint enc{res.params, g.graph_id(), g.entities(), ag.relations(), dict_seed, dict.order_hash(g)};
    save_checkpoint(to_checkpoint(enc), join_path(c.out, "encoder.ckpt"));

    std::string csv = "epoch,loss,hits1,hits3,hits10\n";
    for (const auto& e : res.history) {
        csv += std::to_string(e.epoch) + "," + std::to_string(e.loss) + "," + std::to_string(e.hits1) + "," +
               std::to_string(e.hits3) + "," + std::to_string(e.hits10) + "\n";
    }
    write_text(join_path(c.out, "history.csv"), csv);

    const GcnOutput fwd = gcn_forward(ag, res.params);
    const LinkMetrics lm = filtered_link_metrics(ag, fwd);
    ojson metrics;
    metrics["graph_id"] = g.graph_id();
    metrics["epochs"] = ec.epochs;
    metrics["final_loss"] = res.history.empty() ? ojson(nullptr) : ojson(res.history.back().loss);
    metrics["hits1"] = lm.hits1;
    metrics["hits3"] = lm.hits3;
    metrics["hits10"] = lm.hits10;
    metrics["mrr"] = lm.mrr;
    metrics["corruption_win_rate"] = corruption_win_rate(ag, fwd);
    write_text(join_path(c.out, "metrics.json"), metrics.dump(2) + "\n");
    out << metrics.dump() << "\n";
    return kOk;
}

// ---- gen-qa ------------------------------------------------------------------

struct GenQaArgs {
    std::vector<std::string> graphs;
    std::string templates;
    std::vector<std::string> only;
    std::vector<std::string> skip;
};

int cmd_gen_qa(const Common& c, const GenQaArgs& a, std::ostream& out) {
    require_out(c);
    RunManifest m{"gen-qa", c.config, c.seed, ojson::object(), {}, c.out, ojson::object()};
    for (const auto& g : a.graphs) m.inputs.push_back({g, "graph"});
    if (!a.templates.empty()) m.inputs.push_back({a.templates, "templates"});
    check_inputs(m);
    const std::uint64_t qa_seed = derive_seed(c.seed, "dataset");
    m.seeds["dataset"] = qa_seed;
    m.params["only"] = a.only;
    m.params["skip"] = a.skip;
    write_manifest(m);

    std::vector<QuestionTemplate> bank = load_bank(a.templates);
    for (const auto& id : a.only) find_template(bank, id);
    for (const auto& id : a.skip) find_template(bank, id);
    auto listed = [](const std::vector<std::string>& ids, const std::string& id) {
        return std::find(ids.begin(), ids.end(), id) != ids.end();
    };
    std::vector<QuestionTemplate> chosen;
    for (const auto& t : bank) {
        if (!a.only.empty() && !listed(a.only, t.template_id)) continue;
        if (listed(a.skip, t.template_id)) continue;
        chosen.push_back(t);
    }
    std::vector<KnowledgeGraph> graphs;
    for (const auto& p : a.graphs) graphs.push_back(load_graph_file(p));
    const auto dataset = generate_dataset(graphs, chosen, qa_seed);
    save_dataset_file(dataset, join_path(c.out, "dataset.jsonl"));
    out << "wrote " << dataset.size() << " QA pairs from " << chosen.size() << " templates\n";
    return kOk;
}

// ---- train-align -------------------------------------------------------------

struct AlignArgs {
    std::string dataset;
    std::vector<std::string> graphs;
    std::vector<std::string> encoders;
    std::string semantic;
    std::string templates;
    int epochs = 0;
    double lr = 0;
    CLI::Option* epochs_opt = nullptr;
    CLI::Option* lr_opt = nullptr;
};

void add_workspace_inputs(RunManifest& m, const std::vector<std::string>& graphs,
                          const std::vector<std::string>& encoders, const std::string& semantic,
                          const std::string& templates) {
    for (const auto& g : graphs) m.inputs.push_back({g, "graph"});
    for (const auto& e : encoders) m.inputs.push_back({e, "encoder"});
    if (!semantic.empty()) m.inputs.push_back({semantic, "semantic"});
    if (!templates.empty()) m.inputs.push_back({templates, "templates"});
}

int cmd_train_align(const Common& c, const AlignArgs& a, std::ostream& out) {
    require_out(c);
    RunManifest m{"train-align", c.config, c.seed, ojson::object(), {{a.dataset, "dataset"}}, c.out, ojson::object()};
    add_workspace_inputs(m, a.graphs, a.encoders, a.semantic, a.templates);
    check_inputs(m);
    const Config cfg = load_config(c.config);
    Settings s(cfg, "align");
    AlignmentTrainConfig tc;
    tc.epochs = s.get(a.epochs_opt, a.epochs, "epochs", tc.epochs);
    tc.lr = s.get(a.lr_opt, a.lr, "lr", tc.lr);
    tc.cosine_decay = s.get<bool>(nullptr, false, "cosine_decay", tc.cosine_decay);
    tc.weight_decay = s.get<double>(nullptr, 0, "weight_decay", tc.weight_decay);
    tc.lambda_penalty = s.get<double>(nullptr, 0, "lambda_penalty", tc.lambda_penalty);
    tc.top_k = s.get<int>(nullptr, 0, "top_k", tc.top_k);
    tc.max_ratio = s.get<double>(nullptr, 0, "max_ratio", tc.max_ratio);
    AlignmentDims dims;
    dims.model = s.get<int>(nullptr, 0, "model", dims.model);
    dims.normalize_tokens = s.get<bool>(nullptr, false, "normalize_tokens", dims.normalize_tokens);
    dims.pointer = s.get<bool>(nullptr, false, "pointer", dims.pointer);
    tc.seed = derive_seed(c.seed, "alignment-train");
    const std::uint64_t init_seed = derive_seed(c.seed, "alignment-init");
    m.seeds["alignment_train"] = tc.seed;
    m.seeds["alignment_init"] = init_seed;
    m.params = s.resolved();
    write_manifest(m);

    const Workspace ws(a.graphs, a.encoders, a.semantic);
    const auto bank = load_bank(a.templates);
    const auto dataset = load_dataset_file(a.dataset);
    const auto examples = make_examples(dataset, bank, ws.inputs());
    dims.struct_in = ws.structural_dim();
    dims.sem_in = ws.semantic_dim();
    AlignmentParams init = init_alignment(dims, entity_vocabulary(ws.graphs()), init_seed);
    const auto res = train_alignment(examples, ws.inputs(), std::move(init), tc);
    save_checkpoint(to_checkpoint(res.params), join_path(c.out, "alignment.ckpt"));

    std::string csv = "epoch,mean_loss,mean_ce\n";
    for (const auto& e : res.epochs) {
        csv += std::to_string(e.epoch) + "," + std::to_string(e.mean_loss) + "," + std::to_string(e.mean_ce) + "\n";
    }
    write_text(join_path(c.out, "history.csv"), csv);
    std::string steps = "step,epoch,ce,penalty,loss,lr\n";
    for (const auto& st : res.steps) {
        steps += std::to_string(st.step) + "," + std::to_string(st.epoch) + "," + std::to_string(st.ce) + "," +
                 std::to_string(st.penalty) + "," + std::to_string(st.loss) + "," + std::to_string(st.lr) + "\n";
    }
    write_text(join_path(c.out, "steps.csv"), steps);
    out << "trained on " << examples.size() << " examples for " << tc.epochs << " epochs";
    if (!res.epochs.empty()) out << ", final mean loss " << res.epochs.back().mean_loss;
    out << "\n";
    return kOk;
}

// ---- eval --------------------------------------------------------------------

struct EvalArgs {
    std::string dataset;
    std::vector<std::string> graphs;
    std::vector<std::string> encoders;
    std::string align;
    std::string semantic;
    std::string templates;
    bool oracle = false;
    bool ablate_relations = false;
    int max_steps = 16;
};

std::vector<std::string> oracle_for(const std::string& question, const std::vector<QuestionTemplate>& bank,
                                    const KnowledgeGraph& g) {
    const ParsedQuestion pq = parse_question(question, bank, g);
    const QuestionTemplate& t = find_template(bank, pq.template_id);
    return oracle_answer(g, t, pq.bindings.at(t.anchor_slot()));
}

Matrix head_tokens(const GraphInputs& in, const AlignmentParams& p, bool ablate) {
    Matrix e_g = graph_tokens(in, p);
    if (ablate) {
        for (auto r : in.relation_rows()) e_g.row(static_cast<Eigen::Index>(r)).setZero();
    }
    return e_g;
}

int cmd_eval(const Common& c, const EvalArgs& a, std::ostream& out) {
    require_out(c);
    if (!a.oracle && (a.align.empty() || a.encoders.empty())) {
        throw ArgumentError("eval needs --align and --encoder checkpoints unless --oracle is given");
    }
    RunManifest m{"eval", c.config, c.seed, ojson::object(), {{a.dataset, "dataset"}}, c.out, ojson::object()};
    add_workspace_inputs(m, a.graphs, a.oracle ? std::vector<std::string>{} : a.encoders, a.semantic, a.templates);
    if (!a.oracle) m.inputs.push_back({a.align, "alignment"});
    m.params["oracle"] = a.oracle;
    m.params["ablate_relations"] = a.ablate_relations;
    m.params["max_steps"] = a.max_steps;
    check_inputs(m);
    write_manifest(m);

    const auto bank = load_bank(a.templates);
    const auto dataset = load_dataset_file(a.dataset);
    std::map<std::string, KnowledgeGraph> oracle_graphs;
    std::unique_ptr<Workspace> ws;
    AlignmentParams params;
    if (a.oracle) {
        for (const auto& p : a.graphs) {
            KnowledgeGraph g = load_graph_file(p);
            const std::string id = g.graph_id();
            oracle_graphs.emplace(id, std::move(g));
        }
    } else {
        ws = std::make_unique<Workspace>(a.graphs, a.encoders, a.semantic);
        params = alignment_from_checkpoint(load_checkpoint(a.align));
    }

    std::vector<EvalItem> items;
    double context = 0;
    double text_context = 0;
    std::map<std::string, std::size_t> text_lengths;
    for (const auto& qa : dataset) {
        const KnowledgeGraph* g = nullptr;
        std::vector<std::string> pred;
        const auto t0 = std::chrono::steady_clock::now();
        if (a.oracle) {
            auto it = oracle_graphs.find(qa.graph_id);
            if (it == oracle_graphs.end()) throw LookupError("graph '" + qa.graph_id + "' was not loaded");
            g = &it->second;
            pred = oracle_for(qa.question, bank, *g);
        } else {
            const GraphInputs& in = ws->inputs_for(qa.graph_id);
            g = in.graph;
            const QueryInput q = resolve_query(qa, bank, in);
            pred = answer(head_tokens(in, params, a.ablate_relations), in, q, params, a.max_steps);
        }
        const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        items.push_back(score_item(qa, std::move(pred), ms));
        context += static_cast<double>(
            graph_context_length(g->num_entities() + g->num_relations(), render_instruction(qa)));
        auto [pos, fresh] = text_lengths.emplace(qa.graph_id, 0);
        if (fresh) pos->second = text_triple_context_length(*g);
        text_context += static_cast<double>(pos->second + count_tokens(render_instruction(qa)));
    }
    const double n = dataset.empty() ? 1.0 : static_cast<double>(dataset.size());
    const EvalResult r = summarize(std::move(items), context / n);
    ojson report = ojson::parse(eval_report_json(r, true, -1));
    report["mean_text_triple_context_length"] = text_context / n;
    report["answerer"] = a.oracle ? "oracle" : "neural";
    write_text(join_path(c.out, "eval.json"), report.dump(2) + "\n");
    ojson brief;
    for (const char* k : {"accuracy", "nlcs", "wjaccard", "mean_infer_ms", "mean_context_length"}) {
        if (report.contains(k)) brief[k] = report[k];
    }
    brief["items"] = dataset.size();
    out << brief.dump() << "\n";
    return kOk;
}

// ---- repl --------------------------------------------------------------------

struct ReplArgs {
    std::string graph;
    std::string encoder;
    std::string align;
    std::string semantic;
    std::string templates;
    int max_steps = 16;
};

int cmd_repl(const Common& c, const ReplArgs& a, std::istream& in, std::ostream& out) {
    RunManifest m{"repl", c.config, c.seed, ojson::object(), {}, c.out, ojson::object()};
    add_workspace_inputs(m, {a.graph}, {a.encoder}, a.semantic, a.templates);
    m.inputs.push_back({a.align, "alignment"});
    check_inputs(m);
    if (!c.out.empty()) write_manifest(m);

    const Workspace ws({a.graph}, {a.encoder}, a.semantic);
    const AlignmentParams params = alignment_from_checkpoint(load_checkpoint(a.align));
    const auto bank = load_bank(a.templates);
    const GraphInputs& gi = ws.inputs().front();
    const Matrix e_g = graph_tokens(gi, params);

    std::string line;
    while (std::getline(in, line)) {
        const std::string q = normalize_question(line);
        if (q.empty()) continue;
        if (q == "quit" || q == "exit") break;
        try {
            const ParsedQuestion pq = parse_question(q, bank, *gi.graph);
            const QuestionTemplate& t = find_template(bank, pq.template_id);
            const auto gold = oracle_answer(*gi.graph, t, pq.bindings.at(t.anchor_slot()));
            const auto pred = answer(e_g, gi, resolve_query(pq, bank, gi), params, a.max_steps);
            out << "neural: " << join_names(pred) << "\n";
            out << "oracle: " << join_names(gold) << "\n";
            out << "match: " << (pred == gold ? "yes" : "no") << "\n";
        } catch (const Error& e) {
            out << "unrecognized question (" << e.what() << ")\n";
            out << "nearest template: " << bank[nearest_template(q, bank)].pattern << "\n";
        }
        out.flush();
    }
    return kOk;
}

// ---- sim ---------------------------------------------------------------------

struct SimArgs {
    std::string scene;
    std::string target;
    std::string answers;
    std::string svg;
    std::string planner;
    int objects = 0;
    int episodes = 0;
    int budget = 0;
    CLI::Option* planner_opt = nullptr;
    CLI::Option* objects_opt = nullptr;
    CLI::Option* episodes_opt = nullptr;
    CLI::Option* budget_opt = nullptr;
};

// Answer file: a JSON array of names, or one name per line.
std::vector<std::string> load_answer_names(const std::string& path) {
    const std::string text = read_all(path);
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '[') {
        try {
            return nlohmann::json::parse(text).get<std::vector<std::string>>();
        } catch (const nlohmann::json::exception& e) {
            throw FormatError(path + ": " + e.what());
        }
    }
    std::vector<std::string> names;
    std::istringstream ss(text);
    std::string line;
    while (std::getline(ss, line)) {
        const auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos || line[b] == '#') continue;
        const auto e = line.find_last_not_of(" \t\r");
        names.push_back(line.substr(b, e - b + 1));
    }
    return names;
}

int resolve_object(const StackedScene& scene, const std::string& ref) {
    try {
        std::size_t used = 0;
        const int id = std::stoi(ref, &used);
        if (used == ref.size()) {
            scene.object(id);
            return id;
        }
    } catch (const std::logic_error&) {
    }
    return scene.id_of(ref);
}

int cmd_sim(const Common& c, const SimArgs& a, std::ostream& out) {
    require_out(c);
    if (!a.target.empty() && !a.answers.empty()) throw ArgumentError("--target and --answers are exclusive");
    RunManifest m{"sim", c.config, c.seed, ojson::object(), {}, c.out, ojson::object()};
    if (!a.scene.empty()) m.inputs.push_back({a.scene, "scene"});
    if (!a.answers.empty()) m.inputs.push_back({a.answers, "answers"});
    check_inputs(m);
    const Config cfg = load_config(c.config);
    Settings s(cfg, "sim");
    const PlannerKind planner = planner_from_string(s.get<std::string>(a.planner_opt, a.planner, "planner", "greedy"));
    const int n_objects = s.get(a.objects_opt, a.objects, "objects", 6);
    const int episodes = a.scene.empty() ? s.get(a.episodes_opt, a.episodes, "episodes", 1) : 1;
    int budget = s.get(a.budget_opt, a.budget, "budget", 0);
    LabelConfig lc;
    lc.label_w = s.get<double>(nullptr, 0, "label_w", lc.label_w);
    lc.label_h = s.get<double>(nullptr, 0, "label_h", lc.label_h);
    lc.angle_step_deg = s.get<double>(nullptr, 0, "angle_step_deg", lc.angle_step_deg);
    if (episodes < 1) throw ArgumentError("episodes must be positive");
    m.seeds["scenes"] = derive_seed(c.seed, "scenes");
    m.seeds["targets"] = derive_seed(c.seed, "targets");
    m.params = s.resolved();
    if (!a.target.empty()) m.params["target"] = a.target;
    if (!a.svg.empty()) m.params["svg"] = a.svg;
    write_manifest(m);

    const std::vector<std::string> answer_names = a.answers.empty() ? std::vector<std::string>{}
                                                                    : load_answer_names(a.answers);
    if (!a.answers.empty() && answer_names.empty()) throw ValidationError(a.answers + ": no answer names");
    Rng target_rng(derive_seed(c.seed, "targets"));
    std::string log;
    std::vector<EpisodeSteps> records;
    int terminated = 0;
    StackedScene first_scene;
    for (int e = 0; e < episodes; ++e) {
        StackedScene scene;
        if (!a.scene.empty()) {
            scene = load_scene_file(a.scene);
        } else {
            SceneConfig sc;
            const int n = std::max<int>(n_objects, static_cast<int>(answer_names.size()));
            for (int i = 0; i < n; ++i) {
                sc.names.push_back(i < static_cast<int>(answer_names.size()) ? answer_names[i]
                                                                                : "object" + std::to_string(i));
            }
            scene = generate_scene(n, derive_seed(derive_seed(c.seed, "scenes"), static_cast<std::uint64_t>(e)), sc);
        }
        if (e == 0) first_scene = scene;
        std::vector<int> targets;
        if (!answer_names.empty()) {
            for (const auto& name : answer_names) targets.push_back(scene.id_of(name));
        } else if (!a.target.empty()) {
            targets.push_back(resolve_object(scene, a.target));
        } else {
            const auto& objs = scene.objects();
            targets.push_back(objs[target_rng.below(objs.size())].id);
        }
        const int ep_budget = budget > 0 ? budget : static_cast<int>(scene.size());
        const Episode ep = run_episode(scene, targets, planner, ep_budget);
        log += episode_to_jsonl(ep, scene, e);
        EpisodeSteps steps;
        for (const auto& st : ep.steps) steps.push_back({st.was_optimal});
        records.push_back(std::move(steps));
        terminated += ep.terminated ? 1 : 0;
    }
    write_text(join_path(c.out, "episodes.jsonl"), log);
    if (a.scene.empty()) write_text(join_path(c.out, "scene.json"), scene_to_json(first_scene) + "\n");
    ojson report;
    report["planner"] = std::string(to_string(planner));
    report["episodes"] = episodes;
    report["terminated"] = terminated;
    report["opr"] = opr(records);
    report["average_step"] = average_step(records);
    if (!a.svg.empty()) {
        const auto placements = place_labels(first_scene, lc);
        write_text(a.svg, render_svg(first_scene, placements));
        report["svg"] = a.svg;
    }
    write_text(join_path(c.out, "report.json"), report.dump(2) + "\n");
    out << report.dump() << "\n";
    return kOk;
}

}  // namespace

int run_cli(int argc, char** argv, std::istream& in, std::ostream& out, std::ostream& err) {
    CLI::App app{"Knowledge-graph question answering toolkit for assembly graphs", "kgqa"};
    app.require_subcommand(1);
    Common common;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--seed", common.seed, "Root seed; every random stream is derived from it");
        sub->add_option("--out", common.out, "Output directory");
        sub->add_option("--config", common.config, "TOML-style key = value config file");
    };
    std::function<int()> action;

    auto* ingest = app.add_subcommand("ingest", "Parse and validate a triple file");
    IngestArgs ingest_args;
    ingest->add_option("triples", ingest_args.triples, "TSV triple file")->required();
    ingest->add_option("--graph-id", ingest_args.graph_id, "Graph id (default: file stem)");
    add_common(ingest);
    ingest->callback([&] { action = [&] { return cmd_ingest(common, ingest_args, out); }; });

    auto* split = app.add_subcommand("split", "Sample connected random subgraphs");
    SplitArgs split_args;
    split->add_option("graph", split_args.graph, "Graph file (.json or .tsv)")->required();
    split_args.count_opt = split->add_option("--count", split_args.count, "Number of subgraphs");
    split_args.min_opt = split->add_option("--min-triples", split_args.min_triples, "Minimum triples per subgraph");
    add_common(split);
    split->callback([&] { action = [&] { return cmd_split(common, split_args, out); }; });

    auto* gcn = app.add_subcommand("train-gcn", "Train the relational GCN encoder");
    TrainGcnArgs gcn_args;
    gcn->add_option("graph", gcn_args.graph, "Graph file")->required();
    gcn_args.epochs_opt = gcn->add_option("--epochs", gcn_args.epochs, "Training epochs");
    gcn_args.lr_opt = gcn->add_option("--lr", gcn_args.lr, "Learning rate");
    gcn_args.op_opt = gcn->add_option("--op", gcn_args.op, "Composition: corr, mult or sub");
    add_common(gcn);
    gcn->callback([&] { action = [&] { return cmd_train_gcn(common, gcn_args, out); }; });

    auto* genqa = app.add_subcommand("gen-qa", "Generate a QA dataset from graphs");
    GenQaArgs genqa_args;
    genqa->add_option("graphs", genqa_args.graphs, "Graph files")->required();
    genqa->add_option("--templates", genqa_args.templates, "Template bank JSON (default: built-in bank)");
    genqa->add_option("--only", genqa_args.only, "Use only these template ids")->delimiter(',');
    genqa->add_option("--skip", genqa_args.skip, "Skip these template ids")->delimiter(',');
    add_common(genqa);
    genqa->callback([&] { action = [&] { return cmd_gen_qa(common, genqa_args, out); }; });

    auto* align = app.add_subcommand("train-align", "Train the projectors and the QA head");
    AlignArgs align_args;
    align->add_option("--dataset", align_args.dataset, "QA dataset JSONL")->required();
    align->add_option("--graph", align_args.graphs, "Graph files")->required();
    align->add_option("--encoder", align_args.encoders, "Encoder checkpoints, one per graph")->required();
    align->add_option("--semantic", align_args.semantic, "Semantic vector file (default: built-in embedder)");
    align->add_option("--templates", align_args.templates, "Template bank JSON");
    align_args.epochs_opt = align->add_option("--epochs", align_args.epochs, "Training epochs");
    align_args.lr_opt = align->add_option("--lr", align_args.lr, "Initial learning rate");
    add_common(align);
    align->callback([&] { action = [&] { return cmd_train_align(common, align_args, out); }; });

    auto* eval = app.add_subcommand("eval", "Score a dataset with the neural head or the oracle");
    EvalArgs eval_args;
    eval->add_option("--dataset", eval_args.dataset, "QA dataset JSONL")->required();
    eval->add_option("--graph", eval_args.graphs, "Graph files")->required();
    eval->add_option("--encoder", eval_args.encoders, "Encoder checkpoints, one per graph");
    eval->add_option("--align", eval_args.align, "Alignment checkpoint");
    eval->add_option("--semantic", eval_args.semantic, "Semantic vector file");
    eval->add_option("--templates", eval_args.templates, "Template bank JSON");
    eval->add_flag("--oracle", eval_args.oracle, "Answer with the graph traversal oracle");
    eval->add_flag("--ablate-relations", eval_args.ablate_relations, "Zero the relation rows of the graph tokens");
    eval->add_option("--max-steps", eval_args.max_steps, "Decode step limit");
    add_common(eval);
    eval->callback([&] { action = [&] { return cmd_eval(common, eval_args, out); }; });

    auto* repl = app.add_subcommand("repl", "Interactive question answering over one graph");
    ReplArgs repl_args;
    repl->add_option("--graph", repl_args.graph, "Graph file")->required();
    repl->add_option("--encoder", repl_args.encoder, "Encoder checkpoint")->required();
    repl->add_option("--align", repl_args.align, "Alignment checkpoint")->required();
    repl->add_option("--semantic", repl_args.semantic, "Semantic vector file");
    repl->add_option("--templates", repl_args.templates, "Template bank JSON");
    repl->add_option("--max-steps", repl_args.max_steps, "Decode step limit");
    add_common(repl);
    repl->callback([&] { action = [&] { return cmd_repl(common, repl_args, in, out); }; });

    auto* sim = app.add_subcommand("sim", "Run removal episodes on stacked scenes");
    SimArgs sim_args;
    sim->add_option("--scene", sim_args.scene, "Scene JSON (default: random scenes)");
    sim->add_option("--target", sim_args.target, "Target object id or name");
    sim->add_option("--answers", sim_args.answers, "Multi-hop answer file; its names are grasped in order");
    sim->add_option("--svg", sim_args.svg, "Write an annotated SVG of the first scene");
    sim_args.planner_opt = sim->add_option("--planner", sim_args.planner, "greedy, optimal (brute-force) or adversarial");
    sim_args.objects_opt = sim->add_option("--objects", sim_args.objects, "Objects per random scene");
    sim_args.episodes_opt = sim->add_option("--episodes", sim_args.episodes, "Random scenes to run");
    sim_args.budget_opt = sim->add_option("--budget", sim_args.budget, "Step budget per episode (default: scene size)");
    add_common(sim);
    sim->callback([&] { action = [&] { return cmd_sim(common, sim_args, out); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        // Help for a subcommand arrives as a ParseError with exit code 0.
        if (e.get_exit_code() == 0) {
            app.exit(e, out, err);
            return kOk;
        }
        app.exit(e, out, err);
        return kValidation;
    }
    try {
        return action ? action() : kValidation;
    } catch (const Error& e) {
        err << "kgqa: " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        err << "kgqa: " << e.what() << "\n";
        return kFailure;
    }
}

}  // namespace kgqa::cli
