#include <algorithm>
#include <limits>
#include <queue>
#include <set>

#include "json.hpp"
#include "kgqa/error.hpp"
#include "kgqa/stack_sim.hpp"

namespace kgqa {

namespace {

PlanMode auto_mode(const StackedScene& scene) {
    return scene.size() <= kExhaustiveLimit ? PlanMode::Exhaustive : PlanMode::Closure;
}

std::vector<int> ids_of(const StackedScene& scene) {
    std::vector<int> ids;
    for (const auto& o : scene.objects()) ids.push_back(o.id);
    return ids;
}

// Everything `id` rests on, transitively.
std::set<int> descendants(const StackedScene& scene, int id) {
    std::set<int> seen;
    std::queue<int> frontier;
    frontier.push(id);
    while (!frontier.empty()) {
        const int cur = frontier.front();
        frontier.pop();
        for (const auto& e : scene.support_edges()) {
            if (e.upper == cur && seen.insert(e.lower).second) frontier.push(e.lower);
        }
    }
    return seen;
}

}  // namespace

OptimalPlan::OptimalPlan(const StackedScene& scene, int target, PlanMode mode)
    : scene_(scene), target_(target), mode_(mode) {
    if (scene.size() > 32) throw ModeError("scenes over 32 objects are not supported");
    if (mode == PlanMode::Exhaustive && scene.size() > kExhaustiveLimit) {
        throw ModeError("exhaustive planning supports at most " + std::to_string(kExhaustiveLimit) +
                        " objects (scene has " + std::to_string(scene.size()) +
                        "); use the ancestor-closure mode instead");
    }
    scene.object(target);
    std::unordered_map<int, std::size_t> bit;
    for (std::size_t i = 0; i < scene.size(); ++i) bit.emplace(scene.objects()[i].id, i);
    target_bit_ = bit.at(target);
    above_.assign(scene.size(), 0);
    for (const auto& e : scene.support_edges()) above_[bit.at(e.lower)] |= Mask{1} << bit.at(e.upper);
    full_ = scene.size() == 32 ? ~Mask{0} : (Mask{1} << scene.size()) - 1;
}

OptimalPlan::Mask OptimalPlan::mask_of(const std::vector<int>& ids) const {
    Mask m = 0;
    for (int id : ids) {
        for (std::size_t i = 0; i < scene_.size(); ++i) {
            if (scene_.objects()[i].id == id) m |= Mask{1} << i;
        }
    }
    return m;
}

bool OptimalPlan::graspable_in(Mask s, std::size_t bit) const { return (above_[bit] & s) == 0; }

std::size_t OptimalPlan::ancestors_in(Mask s) const {
    Mask seen = 0;
    std::vector<std::size_t> stack{target_bit_};
    while (!stack.empty()) {
        const auto b = stack.back();
        stack.pop_back();
        const Mask up = above_[b] & s & ~seen;
        seen |= up;
        for (std::size_t i = 0; i < scene_.size(); ++i) {
            if (up & (Mask{1} << i)) stack.push_back(i);
        }
    }
    return static_cast<std::size_t>(__builtin_popcount(seen));
}

int OptimalPlan::h(Mask s) const {
    if (!(s & (Mask{1} << target_bit_))) throw ArgumentError("target already removed from the state");
    if (graspable_in(s, target_bit_)) return 1;
    if (mode_ == PlanMode::Closure) return static_cast<int>(ancestors_in(s)) + 1;
    if (auto it = memo_.find(s); it != memo_.end()) return it->second;
    int best = std::numeric_limits<int>::max();
    for (std::size_t i = 0; i < scene_.size(); ++i) {
        const Mask b = Mask{1} << i;
        if (i == target_bit_ || !(s & b) || !graspable_in(s, i)) continue;
        best = std::min(best, 1 + h(s & ~b));
    }
    memo_.emplace(s, best);
    return best;
}

int OptimalPlan::min_length() const { return h(full_); }

int OptimalPlan::steps_to_go(const std::vector<int>& remaining_ids) const { return h(mask_of(remaining_ids)); }

bool OptimalPlan::is_optimal(const std::vector<int>& remaining_ids, int id) const {
    const Mask s = mask_of(remaining_ids);
    const Mask a = mask_of({id});
    if (!a || !(s & a)) return false;
    std::size_t bit = 0;
    while (!(a & (Mask{1} << bit))) ++bit;
    if (!graspable_in(s, bit)) return false;
    if (bit == target_bit_) return true;
    return 1 + h(s & ~a) == h(s);
}

std::vector<int> OptimalPlan::minimal_sequence() const {
    std::vector<int> remaining = ids_of(scene_);
    std::sort(remaining.begin(), remaining.end());
    std::vector<int> seq;
    while (true) {
        int pick = -1;
        for (int id : remaining) {
            if (is_optimal(remaining, id)) {
                pick = id;
                break;
            }
        }
        if (pick < 0) throw ModeError("no optimal action found");
        seq.push_back(pick);
        if (pick == target_) return seq;
        remaining.erase(std::find(remaining.begin(), remaining.end(), pick));
    }
}

OptimalPlan optimal_plan(const StackedScene& scene, int target, PlanMode mode) {
    return OptimalPlan(scene, target, mode);
}

std::string_view to_string(PlannerKind k) {
    switch (k) {
        case PlannerKind::Greedy: return "greedy";
        case PlannerKind::Optimal: return "optimal";
        case PlannerKind::Adversarial: return "adversarial";
    }
    return "greedy";
}

PlannerKind planner_from_string(std::string_view name) {
    if (name == "greedy") return PlannerKind::Greedy;
    if (name == "optimal" || name == "brute-force") return PlannerKind::Optimal;
    if (name == "adversarial") return PlannerKind::Adversarial;
    throw ArgumentError("unknown planner '" + std::string(name) + "' (greedy, optimal, adversarial)");
}

int greedy_step(const StackedScene& scene, int target) {
    if (is_graspable(scene, target)) return target;
    const auto anc = ancestors(scene, target);
    const std::set<int> anc_set(anc.begin(), anc.end());
    int best = -1;
    std::size_t best_depth = 0;
    for (int id : graspable_set(scene)) {
        if (!anc_set.count(id)) continue;
        std::size_t depth = 0;
        for (int below : descendants(scene, id)) depth += anc_set.count(below);
        if (best < 0 || depth > best_depth) {
            best = id;
            best_depth = depth;
        }
    }
    if (best < 0) throw ModeError("target " + std::to_string(target) + " has no graspable ancestor");
    return best;
}

int optimal_step(const StackedScene& scene, int target) {
    const OptimalPlan plan(scene, target, auto_mode(scene));
    const auto ids = ids_of(scene);
    for (int id : graspable_set(scene)) {
        if (plan.is_optimal(ids, id)) return id;
    }
    throw ModeError("no optimal action for target " + std::to_string(target));
}

int adversarial_step(const StackedScene& scene, int target) {
    if (is_graspable(scene, target)) {
        for (int id : graspable_set(scene)) {
            if (id != target) return id;
        }
        return target;
    }
    const auto anc = ancestors(scene, target);
    for (int id : graspable_set(scene)) {
        if (id != target && !std::binary_search(anc.begin(), anc.end(), id)) return id;
    }
    return greedy_step(scene, target);
}

int planner_step(PlannerKind k, const StackedScene& scene, int target) {
    switch (k) {
        case PlannerKind::Greedy: return greedy_step(scene, target);
        case PlannerKind::Optimal: return optimal_step(scene, target);
        case PlannerKind::Adversarial: return adversarial_step(scene, target);
    }
    return greedy_step(scene, target);
}

Episode run_episode(const StackedScene& scene, const std::vector<int>& targets, const StepPolicy& policy,
                    int budget) {
    if (targets.empty()) throw ArgumentError("episode needs at least one target");
    if (budget < 1) throw ArgumentError("step budget must be positive");
    for (int t : targets) scene.object(t);
    Episode ep;
    ep.targets = targets;
    StackedScene work = scene;
    for (int target : targets) {
        if (!work.contains(target)) continue;  // already cleared away
        const OptimalPlan plan(work, target, auto_mode(work));
        while (work.contains(target)) {
            if (static_cast<int>(ep.steps.size()) >= budget) return ep;
            const int pick = policy(work, target);
            EpisodeStep step;
            step.removed = pick;
            step.target = target;
            step.was_graspable = work.contains(pick) && is_graspable(work, pick);
            if (!step.was_graspable) {
                throw ArgumentError("planner chose object " + std::to_string(pick) + " which is not graspable");
            }
            step.was_optimal = plan.is_optimal(ids_of(work), pick);
            ep.steps.push_back(step);
            work = work.without(pick);
        }
    }
    ep.terminated = true;
    return ep;
}

Episode run_episode(const StackedScene& scene, const std::vector<int>& targets, PlannerKind planner,
                    int budget) {
    return run_episode(
        scene, targets, [planner](const StackedScene& s, int t) { return planner_step(planner, s, t); }, budget);
}

std::string episode_to_jsonl(const Episode& ep, const StackedScene& scene, int episode_index) {
    std::string out;
    for (std::size_t i = 0; i < ep.steps.size(); ++i) {
        const auto& s = ep.steps[i];
        nlohmann::ordered_json j;
        j["episode"] = episode_index;
        j["step"] = i;
        j["target"] = s.target;
        j["removed"] = s.removed;
        j["removed_name"] = scene.object(s.removed).name;
        j["graspable"] = s.was_graspable;
        j["optimal"] = s.was_optimal;
        out += j.dump();
        out += '\n';
    }
    return out;
}

}  // namespace kgqa
