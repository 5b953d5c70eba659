#include "kgqa/synth.hpp"

#include <set>

#include "kgqa/error.hpp"
#include "kgqa/rng.hpp"

namespace kgqa {

AssemblyRecipe AssemblyRecipe::default_recipe() {
    AssemblyRecipe r;
    r.actions = {"tighten", "insert", "press_fit", "align", "screw_in", "mount", "lubricate"};
    r.tools = {"wrench", "screwdriver", "press", "pliers", "torque_wrench", "hammer", "hex_key"};
    r.workspaces = {"workbench", "fixture_A", "fixture_B", "press_station", "assembly_table"};
    r.details = {"torque_2Nm", "torque_5Nm", "align_marks", "apply_grease",
                 "check_seal",  "hand_tight", "depth_3mm",   "clockwise"};
    r.parts = {"bolt_M4", "bolt_M5",  "valve_core", "spring",  "cap",    "o_ring",
               "diaphragm", "seat",   "stem",       "nut_M6",  "washer", "housing",
               "filter",   "gasket",  "handle",     "screw_M3", "piston", "sleeve"};
    r.attributes = {"metal", "rubber", "plastic", "threaded", "fragile", "heavy"};
    r.subassemblies = {"valve_body_sub", "cap_sub", "stem_sub", "core_sub"};
    return r;
}

namespace {

const std::string& pick(Rng& rng, const std::vector<std::string>& pool, const char* what) {
    if (pool.empty()) throw ArgumentError(std::string("recipe pool '") + what + "' is empty");
    return pool[rng.below(pool.size())];
}

}  // namespace

KnowledgeGraph make_assembly_graph(const AssemblyRecipe& recipe, const std::string& product,
                                   std::uint64_t seed) {
    if (recipe.min_steps < 1 || recipe.max_steps < recipe.min_steps) {
        throw ArgumentError("invalid step range in recipe");
    }
    if (recipe.min_parts_per_step < 0 || recipe.max_parts_per_step < recipe.min_parts_per_step) {
        throw ArgumentError("invalid parts range in recipe");
    }
    if (static_cast<int>(recipe.parts.size()) < recipe.max_parts_per_step) {
        throw ArgumentError("parts pool smaller than max_parts_per_step");
    }
    Rng rng(derive_seed(seed, "assembly-graph"));
    KnowledgeGraph g(product);
    const int n_steps = recipe.min_steps +
                        static_cast<int>(rng.below(recipe.max_steps - recipe.min_steps + 1));
    std::set<std::string> attributed;
    std::set<std::string> produced;
    for (int s = 1; s <= n_steps; ++s) {
        const std::string step = "step" + std::to_string(s);
        g.add_triple(product, "has_step", step);
        if (recipe.link_steps && s > 1) g.add_triple("step" + std::to_string(s - 1), "next_step", step);
        g.add_triple(step, "has_action", pick(rng, recipe.actions, "actions"));
        g.add_triple(step, "acts_to", pick(rng, recipe.workspaces, "workspaces"));
        g.add_triple(step, "has_detail", pick(rng, recipe.details, "details"));

        // Distinct parts for this step, one tool inserted at a random position.
        const int n_parts = recipe.min_parts_per_step +
                            static_cast<int>(rng.below(recipe.max_parts_per_step -
                                                       recipe.min_parts_per_step + 1));
        std::vector<std::string> pool = recipe.parts;
        rng.shuffle(pool);
        std::vector<std::pair<std::string, std::string>> uses;
        for (int p = 0; p < n_parts; ++p) uses.emplace_back("acts_on", pool[p]);
        const auto tool_pos = rng.below(uses.size() + 1);
        uses.insert(uses.begin() + static_cast<std::ptrdiff_t>(tool_pos),
                    {"uses_tool", pick(rng, recipe.tools, "tools")});
        for (const auto& [rel, obj] : uses) {
            g.add_triple(step, rel, obj);
            if (rel == "acts_on" && !recipe.attributes.empty() && attributed.insert(obj).second) {
                g.add_triple(obj, "has_attribute", pick(rng, recipe.attributes, "attributes"));
            }
        }
        if (!recipe.subassemblies.empty() && rng.uniform() < recipe.produces_probability) {
            const auto& sub = pick(rng, recipe.subassemblies, "subassemblies");
            if (produced.insert(sub).second) g.add_triple(step, "produces", sub);
        }
    }
    return g;
}

}  // namespace kgqa
