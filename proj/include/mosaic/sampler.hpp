#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "mosaic/scene.hpp"

namespace mosaic {

enum class Distribution : std::uint8_t { Uniform, Skewed };

std::string_view distribution_name(Distribution d);
Distribution distribution_from_name(std::string_view name);

struct DatasetConfig {
    Task task = Task::Counting;
    Variant variant = Variant::Base;
    std::int64_t size = 0;
    Distribution distribution = Distribution::Uniform;
    int diagonals_removed = 0;
    int resolution = 128;
    int supersampling = 4;
    std::uint64_t seed = 0;
    int max_count = kDefaultMaxCount;
    Color counting_color = Color::Gray;
    std::string output_dir = "dataset";
};

struct ClassAllocation {
    std::vector<std::int64_t> counts;
    std::int64_t total = 0;
};

/// Per-cell budgets for a concept-pair grid with the first `removed_diagonals`
/// generalized diagonals held out.
struct HoldoutPlan {
    int n = 0;
    int removed_diagonals = 0;
    std::int64_t per_cell = 0;
    std::vector<bool> seen_mask;  // row-major n*n
    std::int64_t realized_total = 0;

    bool seen(int row, int col) const { return seen_mask[static_cast<std::size_t>(row * n + col)]; }
    int seen_cells() const;
};

/// Canonical skew weights per 100000 samples, most frequent class first.
inline constexpr std::array<std::int64_t, 10> kSkewWeights{22550, 17950, 14350, 11450, 9150,
                                                           7300,  5850,  4650,  3750,  3000};

ClassAllocation allocate_counts(Distribution distribution, std::int64_t total, int num_classes);
HoldoutPlan build_holdout_plan(int n, int removed_diagonals, std::int64_t budget);

/// Object geometry constants for the procedural scenes.
inline constexpr double kObjectRadius = 0.06;
inline constexpr double kRelationMinDistance = 0.15;
inline constexpr double kRelationMaxDistance = 0.35;
inline constexpr double kGridRadius = 0.30;
inline constexpr double kGridRadialJitter = 0.03;
inline constexpr double kGridAngularJitter = 4.0;
inline constexpr int kComplexMinObjects = 2;
inline constexpr int kComplexMaxObjects = 10;
inline constexpr int kPlacementAttempts = 10000;
inline constexpr Color kRelationTargetColor = Color::Red;

/// Deterministic per-sample random stream keyed by (dataset seed, sample index).
/// Draws use only engine output bits, so values are identical on every platform.
class SampleRng {
public:
    SampleRng(std::uint64_t seed, std::uint64_t index);

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi);
    /// Uniform integer in [lo, hi].
    int uniform_int(int lo, int hi);

private:
    std::mt19937_64 engine_;
};

/// Rounds to the 9 significant digits used by the manifest format, so that an
/// in-memory scene equals its serialized form.
double quantize_coordinate(double v);

struct SampleOptions {
    /// Forces the total number of objects for Complex variants.
    std::optional<int> total_objects;
};

SceneSpec sample_attribution_scene(const DatasetConfig& config, const ConditionLabel& label,
                                   SampleRng& rng, const SampleOptions& options = {});
SceneSpec sample_relation_scene(const DatasetConfig& config, const ConditionLabel& label,
                                SampleRng& rng, const SampleOptions& options = {});
SceneSpec sample_counting_scene(const DatasetConfig& config, const ConditionLabel& label,
                                SampleRng& rng);

/// Dispatches on config.task.
SceneSpec sample_scene(const DatasetConfig& config, const ConditionLabel& label, SampleRng& rng);

/// Size of the concept-pair grid for this configuration, if it has one.
std::optional<int> concept_grid_size(const DatasetConfig& config);
/// Label of cell (row, col) of the concept-pair grid.
ConditionLabel grid_cell_label(const DatasetConfig& config, int row, int col);
/// Inverse of grid_cell_label.
std::pair<int, int> grid_cell_of(const DatasetConfig& config, const ConditionLabel& label);
int marginal_class_count(const DatasetConfig& config);

struct DatasetPlan {
    /// Label of every training sample, indexed by sample index.
    std::vector<ConditionLabel> labels;
    /// Conditions that are never rendered (held-out cells), in grid order.
    std::vector<ConditionLabel> unseen_conditions;
    std::optional<ClassAllocation> allocation;
    std::optional<HoldoutPlan> holdout;
};

DatasetPlan plan_dataset(const DatasetConfig& config);

/// Generates sample `index` of the plan. Depends only on (config, index).
SceneSpec generate_sample(const DatasetConfig& config, const DatasetPlan& plan, std::size_t index);

/// Calls `sink(index, scene)` for every planned sample, possibly concurrently
/// from `workers` threads. Each scene depends only on (config, index).
void build_dataset(const DatasetConfig& config, const DatasetPlan& plan, unsigned workers,
                   const std::function<void(std::size_t, const SceneSpec&)>& sink);

std::vector<SceneSpec> build_dataset(const DatasetConfig& config, unsigned workers = 1);

}  // namespace mosaic
