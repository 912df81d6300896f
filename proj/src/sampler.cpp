#include "mosaic/sampler.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>

#include "mosaic/parallel.hpp"

namespace mosaic {

std::string_view distribution_name(Distribution d) {
    return d == Distribution::Uniform ? "uniform" : "skewed";
}

Distribution distribution_from_name(std::string_view name) {
    if (name == "uniform") return Distribution::Uniform;
    if (name == "skewed") return Distribution::Skewed;
    throw ArgumentError("unknown distribution '" + std::string(name) + "'");
}

int HoldoutPlan::seen_cells() const {
    return static_cast<int>(std::count(seen_mask.begin(), seen_mask.end(), true));
}

ClassAllocation allocate_counts(Distribution distribution, std::int64_t total, int num_classes) {
    if (num_classes <= 0) throw ConfigError("class count must be positive");
    if (total < num_classes) {
        throw ConfigError("size " + std::to_string(total) + " is below the class count " +
                          std::to_string(num_classes));
    }
    ClassAllocation out;
    out.total = total;
    out.counts.assign(static_cast<std::size_t>(num_classes), 0);

    if (distribution == Distribution::Uniform) {
        const std::int64_t base = total / num_classes;
        const std::int64_t extra = total % num_classes;
        for (int c = 0; c < num_classes; ++c) out.counts[c] = base + (c < extra ? 1 : 0);
        return out;
    }

    if (num_classes != static_cast<int>(kSkewWeights.size())) {
        throw ConfigError("skewed distribution requires exactly 10 classes");
    }
    constexpr std::int64_t kDenominator = 100000;
    std::vector<std::int64_t> remainders(kSkewWeights.size());
    std::int64_t assigned = 0;
    for (std::size_t c = 0; c < kSkewWeights.size(); ++c) {
        const std::int64_t numerator = kSkewWeights[c] * total;
        out.counts[c] = numerator / kDenominator;
        remainders[c] = numerator % kDenominator;
        assigned += out.counts[c];
    }
    // Largest remainder; ties go to the lower class index.
    std::vector<std::size_t> order(kSkewWeights.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return remainders[a] > remainders[b]; });
    for (std::int64_t left = total - assigned, i = 0; left > 0; --left, ++i) {
        ++out.counts[order[static_cast<std::size_t>(i)]];
    }
    return out;
}

HoldoutPlan build_holdout_plan(int n, int removed_diagonals, std::int64_t budget) {
    if (n <= 0) throw ConfigError("grid size must be positive");
    if (removed_diagonals < 0 || removed_diagonals >= n) {
        throw ConfigError("diagonals_removed must lie in 0.." + std::to_string(n - 1));
    }
    const std::int64_t seen_cells = static_cast<std::int64_t>(n) * (n - removed_diagonals);
    if (budget < seen_cells) {
        throw ConfigError("budget " + std::to_string(budget) + " is below the " +
                          std::to_string(seen_cells) + " seen cells");
    }
    HoldoutPlan plan;
    plan.n = n;
    plan.removed_diagonals = removed_diagonals;
    plan.seen_mask.resize(static_cast<std::size_t>(n * n));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            plan.seen_mask[static_cast<std::size_t>(i * n + j)] = diagonal_index(i, j, n) > removed_diagonals;
        }
    }
    plan.per_cell = budget / seen_cells;
    plan.realized_total = plan.per_cell * seen_cells;
    return plan;
}

SampleRng::SampleRng(std::uint64_t seed, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
    engine_.seed(seq);
}

double SampleRng::uniform(double lo, double hi) {
    const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    double v = lo + (hi - lo) * u;
    if (v >= hi) v = std::nextafter(hi, lo);
    return v;
}

int SampleRng::uniform_int(int lo, int hi) {
    const std::uint64_t range = static_cast<std::uint64_t>(hi - lo) + 1;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % range;
    std::uint64_t draw = engine_();
    while (draw >= limit) draw = engine_();
    return lo + static_cast<int>(draw % range);
}

double quantize_coordinate(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 9);
    double out = 0.0;
    std::from_chars(buf, res.ptr, out);
    return out;
}

namespace {

Point quantized(Point p) { return {quantize_coordinate(p.x), quantize_coordinate(p.y)}; }

bool inside_canvas(const SceneObject& o) {
    return o.center.x >= o.radius && o.center.x <= 1.0 - o.radius && o.center.y >= o.radius &&
           o.center.y <= 1.0 - o.radius;
}

bool clear_of(const std::vector<SceneObject>& placed, const SceneObject& candidate) {
    for (const auto& p : placed) {
        const double d = std::hypot(p.center.x - candidate.center.x, p.center.y - candidate.center.y);
        if (d < footprint_radius(p) + footprint_radius(candidate) + kPlacementMargin) return false;
    }
    return true;
}

class PlacementBudget {
public:
    void spend() {
        if (++used_ > kPlacementAttempts) {
            throw GenerationError("object placement exceeded " + std::to_string(kPlacementAttempts) +
                                  " attempts");
        }
    }

private:
    int used_ = 0;
};

void place_uniform(std::vector<SceneObject>& placed, SceneObject obj, SampleRng& rng,
                   PlacementBudget& budget) {
    for (;;) {
        budget.spend();
        obj.center = quantized({rng.uniform(obj.radius, 1.0 - obj.radius),
                                rng.uniform(obj.radius, 1.0 - obj.radius)});
        if (inside_canvas(obj) && clear_of(placed, obj)) {
            placed.push_back(obj);
            return;
        }
    }
}

// Jittered position inside the wedge of `sector`, on the annulus around the canvas center.
Point grid_position(int sector, SampleRng& rng) {
    const auto iv = sector_interval(sector);
    const double theta = (iv.lo_deg + iv.hi_deg) / 2.0 + rng.uniform(-kGridAngularJitter, kGridAngularJitter);
    const double rho = kGridRadius + rng.uniform(-kGridRadialJitter, kGridRadialJitter);
    const Point dir = direction(theta);
    return quantized({0.5 + rho * dir.x, 0.5 + rho * dir.y});
}

void place_in_sector(std::vector<SceneObject>& placed, SceneObject obj, int sector, Point origin,
                     SampleRng& rng, PlacementBudget& budget) {
    for (;;) {
        budget.spend();
        obj.center = grid_position(sector, rng);
        if (inside_canvas(obj) && clear_of(placed, obj) &&
            sector_of_angle(angle_between(origin, obj.center)) == sector) {
            placed.push_back(obj);
            return;
        }
    }
}

SceneSpec make_scene(const DatasetConfig& config, const ConditionLabel& label) {
    SceneSpec scene;
    scene.task = config.task;
    scene.variant = config.variant;
    scene.labels = label;
    scene.seed = config.seed;
    return scene;
}

Color require_palette(std::optional<Color> c, const char* what) {
    if (!c) throw ArgumentError(std::string("label is missing ") + what);
    if (*c == Color::Brown) throw ArgumentError(std::string(what) + " must be a palette color");
    return *c;
}

int complex_total(const SampleOptions& options, SampleRng& rng) {
    if (options.total_objects) {
        if (*options.total_objects < kComplexMinObjects || *options.total_objects > kComplexMaxObjects) {
            throw ArgumentError("complex object total must lie in 2..10");
        }
        return *options.total_objects;
    }
    return rng.uniform_int(kComplexMinObjects, kComplexMaxObjects);
}

}  // namespace

SceneSpec sample_attribution_scene(const DatasetConfig& config, const ConditionLabel& label,
                                   SampleRng& rng, const SampleOptions& options) {
    const Color sphere_color = require_palette(label.sphere_color, "sphere_color");
    const Color cube_color = require_palette(label.cube_color, "cube_color");
    SceneSpec scene = make_scene(config, label);

    const SceneObject sphere{Shape::Sphere, sphere_color, {}, kObjectRadius};
    const SceneObject cube{Shape::Cube, cube_color, {}, kObjectRadius};
    std::vector<SceneObject> wanted{sphere, cube};
    if (config.variant == Variant::Complex) {
        const int total = complex_total(options, rng);
        for (int i = 2; i < total; ++i) wanted.push_back(rng.uniform_int(0, 1) == 0 ? sphere : cube);
    }

    PlacementBudget budget;
    for (const auto& obj : wanted) place_uniform(scene.objects, obj, rng, budget);
    return scene;
}

SceneSpec sample_relation_scene(const DatasetConfig& config, const ConditionLabel& label,
                                SampleRng& rng, const SampleOptions& options) {
    if (!label.relation_sector) throw ArgumentError("label is missing relation_sector");
    const int sector = *label.relation_sector;
    const auto iv = sector_interval(sector);
    const Color target_color = config.variant == Variant::Composition
                                   ? require_palette(label.object_color, "object_color")
                                   : kRelationTargetColor;
    SceneSpec scene = make_scene(config, label);
    SceneObject reference{Shape::Sphere, Color::Brown, {}, kObjectRadius};
    SceneObject target{Shape::Sphere, target_color, {}, kObjectRadius};
    PlacementBudget budget;

    if (config.variant == Variant::Grid) {
        reference.center = {0.5, 0.5};
        scene.objects.push_back(reference);
        place_in_sector(scene.objects, target, sector, reference.center, rng, budget);
        return scene;
    }

    for (;;) {
        budget.spend();
        reference.center = quantized({rng.uniform(reference.radius, 1.0 - reference.radius),
                                      rng.uniform(reference.radius, 1.0 - reference.radius)});
        const double theta = rng.uniform(iv.lo_deg, iv.hi_deg);
        const double dist = rng.uniform(kRelationMinDistance, kRelationMaxDistance);
        const Point dir = direction(theta);
        target.center = quantized({reference.center.x + dist * dir.x, reference.center.y + dist * dir.y});
        if (inside_canvas(target) && clear_of({reference}, target) &&
            sector_of_angle(angle_between(reference.center, target.center)) == sector) {
            break;
        }
    }
    scene.objects.push_back(reference);
    scene.objects.push_back(target);

    if (config.variant == Variant::Complex) {
        const int total = complex_total(options, rng);
        const SceneObject distractor{Shape::Sphere,
                                     target_color == Color::Blue ? Color::Gray : Color::Blue, {},
                                     kObjectRadius};
        for (int i = 2; i < total; ++i) place_uniform(scene.objects, distractor, rng, budget);
    }
    return scene;
}

SceneSpec sample_counting_scene(const DatasetConfig& config, const ConditionLabel& label,
                                SampleRng& rng) {
    if (!label.count) throw ArgumentError("label is missing count");
    const int count = *label.count;
    if (count < 1 || count > config.max_count) {
        throw ArgumentError("count " + std::to_string(count) + " outside 1.." +
                            std::to_string(config.max_count));
    }
    const Color color = config.variant == Variant::Composition
                            ? require_palette(label.object_color, "object_color")
                            : config.counting_color;
    SceneSpec scene = make_scene(config, label);
    const SceneObject sphere{Shape::Sphere, color, {}, kObjectRadius};
    PlacementBudget budget;

    if (config.variant == Variant::Grid) {
        if (count > kSectorCount) throw GenerationError("grid layout holds at most 10 objects");
        for (int m = 1; m <= count; ++m) place_in_sector(scene.objects, sphere, m, {0.5, 0.5}, rng, budget);
        return scene;
    }
    for (int m = 0; m < count; ++m) place_uniform(scene.objects, sphere, rng, budget);
    return scene;
}

SceneSpec sample_scene(const DatasetConfig& config, const ConditionLabel& label, SampleRng& rng) {
    switch (config.task) {
        case Task::Attribution: return sample_attribution_scene(config, label, rng);
        case Task::SpatialRelations: return sample_relation_scene(config, label, rng);
        case Task::Counting: return sample_counting_scene(config, label, rng);
    }
    throw ArgumentError("unknown task");
}

std::optional<int> concept_grid_size(const DatasetConfig& config) {
    if (config.task == Task::Attribution) return kPaletteSize;
    if (config.variant == Variant::Composition) return kPaletteSize;
    return std::nullopt;
}

ConditionLabel grid_cell_label(const DatasetConfig& config, int row, int col) {
    ConditionLabel label;
    switch (config.task) {
        case Task::Attribution:
            label.sphere_color = color_from_index(row);
            label.cube_color = color_from_index(col);
            break;
        case Task::SpatialRelations:
            label.relation_sector = row + 1;
            label.object_color = color_from_index(col);
            break;
        case Task::Counting:
            label.count = row + 1;
            label.object_color = color_from_index(col);
            break;
    }
    return label;
}

std::pair<int, int> grid_cell_of(const DatasetConfig& config, const ConditionLabel& label) {
    switch (config.task) {
        case Task::Attribution:
            return {color_index(require_palette(label.sphere_color, "sphere_color")),
                    color_index(require_palette(label.cube_color, "cube_color"))};
        case Task::SpatialRelations:
            if (!label.relation_sector) throw ArgumentError("label is missing relation_sector");
            return {*label.relation_sector - 1, color_index(require_palette(label.object_color, "object_color"))};
        case Task::Counting:
            if (!label.count) throw ArgumentError("label is missing count");
            return {*label.count - 1, color_index(require_palette(label.object_color, "object_color"))};
    }
    throw ArgumentError("unknown task");
}

int marginal_class_count(const DatasetConfig& config) {
    switch (config.task) {
        case Task::Attribution: return kPaletteSize * kPaletteSize;
        case Task::SpatialRelations: return kSectorCount;
        case Task::Counting: return config.max_count;
    }
    return 0;
}

DatasetPlan plan_dataset(const DatasetConfig& config) {
    DatasetPlan plan;
    if (const auto n = concept_grid_size(config)) {
        if (config.distribution != Distribution::Uniform) {
            throw ConfigError("concept-pair grids support only the uniform distribution");
        }
        plan.holdout = build_holdout_plan(*n, config.diagonals_removed, config.size);
        plan.labels.reserve(static_cast<std::size_t>(plan.holdout->realized_total));
        for (int i = 0; i < *n; ++i) {
            for (int j = 0; j < *n; ++j) {
                const ConditionLabel cell = grid_cell_label(config, i, j);
                if (!plan.holdout->seen(i, j)) {
                    plan.unseen_conditions.push_back(cell);
                    continue;
                }
                plan.labels.insert(plan.labels.end(), static_cast<std::size_t>(plan.holdout->per_cell), cell);
            }
        }
        return plan;
    }

    if (config.diagonals_removed != 0) throw ConfigError("hold-out requires a composition grid");
    const int classes = marginal_class_count(config);
    plan.allocation = allocate_counts(config.distribution, config.size, classes);
    plan.labels.reserve(static_cast<std::size_t>(config.size));
    for (int c = 0; c < classes; ++c) {
        ConditionLabel label;
        if (config.task == Task::Counting) label.count = c + 1;
        else label.relation_sector = c + 1;
        plan.labels.insert(plan.labels.end(), static_cast<std::size_t>(plan.allocation->counts[c]), label);
    }
    return plan;
}

SceneSpec generate_sample(const DatasetConfig& config, const DatasetPlan& plan, std::size_t index) {
    SampleRng rng(config.seed, index);
    return sample_scene(config, plan.labels.at(index), rng);
}

void build_dataset(const DatasetConfig& config, const DatasetPlan& plan, unsigned workers,
                   const std::function<void(std::size_t, const SceneSpec&)>& sink) {
    parallel_for(plan.labels.size(), workers,
                 [&](std::size_t i) { sink(i, generate_sample(config, plan, i)); });
}

std::vector<SceneSpec> build_dataset(const DatasetConfig& config, unsigned workers) {
    const DatasetPlan plan = plan_dataset(config);
    std::vector<SceneSpec> out(plan.labels.size());
    build_dataset(config, plan, workers, [&](std::size_t i, const SceneSpec& s) { out[i] = s; });
    return out;
}

}  // namespace mosaic
