#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace kgqa {

// Axis-aligned box in canvas units, (x, y) is the top-left corner, y grows down.
struct Box {
    double x = 0;
    double y = 0;
    double w = 0;
    double h = 0;

    double cx() const { return x + w / 2; }
    double cy() const { return y + h / 2; }
    // Open-interval test: boxes that only touch do not intersect.
    bool intersects(const Box& o) const;
    bool inside(double width, double height) const;
    friend bool operator==(const Box&, const Box&) = default;
};

struct SceneObject {
    int id = 0;
    std::string name;
    Box box;
    int layer = 0;
    friend bool operator==(const SceneObject&, const SceneObject&) = default;
};

struct Canvas {
    double width = 800;
    double height = 600;
    friend bool operator==(const Canvas&, const Canvas&) = default;
};

struct SupportEdge {
    int upper;
    int lower;
    friend bool operator==(const SupportEdge&, const SupportEdge&) = default;
};

// Top-down view of a pile: objects dropped later lie on every earlier
// object their box overlaps.
class StackedScene {
public:
    StackedScene() = default;
    StackedScene(Canvas canvas, std::vector<SceneObject> objects, std::vector<SupportEdge> edges);

    const Canvas& canvas() const noexcept { return canvas_; }
    const std::vector<SceneObject>& objects() const noexcept { return objects_; }
    const std::vector<SupportEdge>& support_edges() const noexcept { return edges_; }
    std::size_t size() const noexcept { return objects_.size(); }

    bool contains(int id) const;
    const SceneObject& object(int id) const;  // throws LookupError
    int id_of(std::string_view name) const;    // throws LookupError

    // Copy without `id` and its edges.
    StackedScene without(int id) const;
    // Checks the DAG, overlap and layer invariants; throws ValidationError.
    void validate() const;

    friend bool operator==(const StackedScene&, const StackedScene&) = default;

private:
    Canvas canvas_;
    std::vector<SceneObject> objects_;
    std::vector<SupportEdge> edges_;
    std::unordered_map<int, std::size_t> index_;
};

struct SceneConfig {
    Canvas canvas;
    double min_size = 40;
    double max_size = 90;
    int max_layers = 4;        // a drop that would stack higher is retried
    int max_attempts = 200;    // per object
    // Boxes drop inside a centered region this fraction of the canvas wide
    // and high, so they pile up instead of spreading over the floor.
    double pile_fraction = 0.5;
    std::vector<std::string> names;  // object names; "object<i>" when absent
};

StackedScene generate_scene(int n, std::uint64_t seed, const SceneConfig& cfg = {});

// Ids with no incoming support edge, ascending.
std::vector<int> graspable_set(const StackedScene& scene);
bool is_graspable(const StackedScene& scene, int id);
// Everything transitively on top of `id`, ascending.
std::vector<int> ancestors(const StackedScene& scene, int id);

enum class PlanMode { Exhaustive, Closure };
inline constexpr std::size_t kExhaustiveLimit = 15;

// Minimal removal plans from one scene. States are subsets of the scene's
// objects (bit i = i-th object in scene order).
class OptimalPlan {
public:
    OptimalPlan(const StackedScene& scene, int target, PlanMode mode);

    int target() const noexcept { return target_; }
    PlanMode mode() const noexcept { return mode_; }
    // Shortest number of removals, including the final target grasp.
    int min_length() const;
    int steps_to_go(const std::vector<int>& remaining_ids) const;
    // Whether removing `id` from the state lies on some minimal sequence.
    bool is_optimal(const std::vector<int>& remaining_ids, int id) const;
    // One minimal sequence from the full scene.
    std::vector<int> minimal_sequence() const;

private:
    using Mask = std::uint32_t;
    Mask mask_of(const std::vector<int>& ids) const;
    bool graspable_in(Mask s, std::size_t bit) const;
    std::size_t ancestors_in(Mask s) const;
    int h(Mask s) const;

    StackedScene scene_;
    int target_;
    std::size_t target_bit_;
    PlanMode mode_;
    std::vector<Mask> above_;  // per object: bits of objects directly on it
    Mask full_ = 0;
    mutable std::unordered_map<Mask, int> memo_;
};

// Throws ModeError for exhaustive mode on scenes over kExhaustiveLimit.
OptimalPlan optimal_plan(const StackedScene& scene, int target, PlanMode mode = PlanMode::Exhaustive);

enum class PlannerKind { Greedy, Optimal, Adversarial };
std::string_view to_string(PlannerKind k);
PlannerKind planner_from_string(std::string_view name);

int greedy_step(const StackedScene& scene, int target);
// First optimal removal in id order.
int optimal_step(const StackedScene& scene, int target);
// A graspable non-ancestor when one exists, otherwise the greedy choice.
int adversarial_step(const StackedScene& scene, int target);
int planner_step(PlannerKind k, const StackedScene& scene, int target);

struct EpisodeStep {
    int removed = 0;
    int target = 0;
    bool was_graspable = false;
    bool was_optimal = false;
};

struct Episode {
    std::vector<int> targets;
    std::vector<EpisodeStep> steps;
    bool terminated = false;  // every target grasped within the budget
};

using StepPolicy = std::function<int(const StackedScene&, int target)>;

// Targets are grasped in order; a target already taken away as an
// obstruction counts as done. Steps are flagged against the minimal plans
// (exhaustive up to kExhaustiveLimit objects, closure above).
Episode run_episode(const StackedScene& scene, const std::vector<int>& targets, const StepPolicy& policy,
                    int budget);
Episode run_episode(const StackedScene& scene, const std::vector<int>& targets, PlannerKind planner,
                    int budget);

std::string scene_to_json(const StackedScene& scene, int indent = 2);
StackedScene scene_from_json(std::string_view text);
StackedScene load_scene_file(const std::string& path);
std::string episode_to_jsonl(const Episode& ep, const StackedScene& scene, int episode_index = 0);

// ---- annotation --------------------------------------------------------------

struct LabelConfig {
    double label_w = 64;
    double label_h = 18;
    double radius_step = 0;    // 0: label box diagonal
    double angle_step_deg = 30;
    double max_radius = 0;     // 0: canvas diagonal
};

struct LabelPlacement {
    int object_id = 0;
    std::string text;
    Box label;
    double anchor_x = 0;
    double anchor_y = 0;
    double arrow_x0 = 0;  // on the label box edge
    double arrow_y0 = 0;
    double arrow_x1 = 0;  // object center
    double arrow_y1 = 0;
    friend bool operator==(const LabelPlacement&, const LabelPlacement&) = default;
};

// Scanning-circle placement; texts[i] labels objects()[i]. Throws
// PlacementError naming the object when no position fits.
std::vector<LabelPlacement> place_labels(const StackedScene& scene, const std::vector<std::string>& texts,
                                         const LabelConfig& cfg = {});
std::vector<LabelPlacement> place_labels(const StackedScene& scene, const LabelConfig& cfg = {});

std::string render_svg(const StackedScene& scene, const std::vector<LabelPlacement>& placements);

}  // namespace kgqa
