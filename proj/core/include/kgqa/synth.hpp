#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kgqa/graph.hpp"

namespace kgqa {

// Symbol pools and size ranges for synthetic assembly graphs. Graphs drawn
// from the same pools share a vocabulary, so a model trained on some of them
// can be queried on the others.
struct AssemblyRecipe {
    std::vector<std::string> actions;
    std::vector<std::string> tools;
    std::vector<std::string> workspaces;
    std::vector<std::string> details;
    std::vector<std::string> parts;
    std::vector<std::string> attributes;
    std::vector<std::string> subassemblies;
    int min_steps = 4;
    int max_steps = 6;
    int min_parts_per_step = 1;
    int max_parts_per_step = 3;
    double produces_probability = 0.3;
    bool link_steps = true;  // emit next_step edges between consecutive steps

    static AssemblyRecipe default_recipe();
};

// Random product graph: the step count and ordering are drawn at the step
// level; actions, tools, parts and their usage order at the operation level.
KnowledgeGraph make_assembly_graph(const AssemblyRecipe& recipe, const std::string& product,
                                   std::uint64_t seed);

}  // namespace kgqa
