#include "mosaic/dataset_io.hpp"

#include "mosaic/render.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <type_traits>

namespace mosaic {

using nlohmann::json;

namespace {

const json* find_key(const json& j, const char* key) {
    auto it = j.find(key);
    return it == j.end() || it->is_null() ? nullptr : &*it;
}

int get_int(const json& j, const char* key) {
    if (!j.is_number_integer()) throw ParseError(std::string(key) + " must be an integer");
    return j.get<int>();
}

Color get_color(const json& j, const char* key) {
    if (!j.is_string()) throw ParseError(std::string(key) + " must be a color name");
    return color_from_name(j.get<std::string>());
}

double get_number(const json& j, const char* key) {
    if (!j.is_number()) throw ParseError(std::string(key) + " must be a number");
    return j.get<double>();
}

const json& require(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) throw ParseError(std::string("missing key '") + key + "'");
    return *it;
}

std::vector<std::string> split_lines(std::string_view text) {
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string line(text.substr(start, end - start));
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(std::move(line));
        start = end + 1;
    }
    return lines;
}

bool blank(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](char c) { return c == ' ' || c == '\t'; });
}

}  // namespace

ordered_json label_to_json(const ConditionLabel& label) {
    ordered_json j = ordered_json::object();
    if (label.count) j["count"] = *label.count;
    if (label.relation_sector) j["relation_sector"] = *label.relation_sector;
    if (label.sphere_color) j["sphere_color"] = color_name(*label.sphere_color);
    if (label.cube_color) j["cube_color"] = color_name(*label.cube_color);
    if (label.object_color) j["object_color"] = color_name(*label.object_color);
    return j;
}

ConditionLabel label_from_json(const json& j) {
    if (!j.is_object()) throw ParseError("labels must be an object");
    ConditionLabel label;
    for (const auto& [key, value] : j.items()) {
        if (key == "count") label.count = get_int(value, "count");
        else if (key == "relation_sector") label.relation_sector = get_int(value, "relation_sector");
        else if (key == "sphere_color") label.sphere_color = get_color(value, "sphere_color");
        else if (key == "cube_color") label.cube_color = get_color(value, "cube_color");
        else if (key == "object_color") label.object_color = get_color(value, "object_color");
        else throw ParseError("unknown label field '" + key + "'");
    }
    return label;
}

ordered_json record_to_json(const ManifestRecord& r) {
    ordered_json j;
    j["id"] = r.id;
    j["image"] = r.image.empty() ? ordered_json(nullptr) : ordered_json(r.image);
    j["task"] = task_name(r.task);
    j["variant"] = variant_name(r.variant);
    j["labels"] = label_to_json(r.labels);
    j["seen"] = r.seen;
    if (r.scene) {
        ordered_json objs = ordered_json::array();
        for (const auto& o : *r.scene) {
            ordered_json oj;
            oj["shape"] = shape_name(o.shape);
            oj["color"] = color_name(o.color);
            oj["x"] = o.center.x;
            oj["y"] = o.center.y;
            oj["radius"] = o.radius;
            objs.push_back(std::move(oj));
        }
        j["scene"] = std::move(objs);
    } else {
        j["scene"] = nullptr;
    }
    j["seed"] = r.seed;
    return j;
}

ManifestRecord record_from_json(const json& j) {
    if (!j.is_object()) throw ParseError("record must be a JSON object");
    static const std::set<std::string> known{"id", "image", "task", "variant", "labels", "seen", "scene", "seed"};
    for (const auto& [key, value] : j.items()) {
        if (!known.count(key)) throw ParseError("unknown record field '" + key + "'");
    }
    ManifestRecord r;
    const json& id = require(j, "id");
    if (!id.is_string() || id.get<std::string>().empty()) throw ParseError("id must be a non-empty string");
    r.id = id.get<std::string>();
    if (const json* image = find_key(j, "image")) {
        if (!image->is_string()) throw ParseError("image must be a string");
        r.image = image->get<std::string>();
    }
    try {
        r.task = task_from_name(require(j, "task").get<std::string>());
        r.variant = variant_from_name(require(j, "variant").get<std::string>());
    } catch (const json::exception& e) {
        throw ParseError(e.what());
    }
    r.labels = label_from_json(require(j, "labels"));
    const json& seen = require(j, "seen");
    if (!seen.is_boolean()) throw ParseError("seen must be a boolean");
    r.seen = seen.get<bool>();
    if (const json* scene = find_key(j, "scene")) {
        if (!scene->is_array()) throw ParseError("scene must be an array of objects");
        std::vector<SceneObject> objs;
        for (const auto& oj : *scene) {
            if (!oj.is_object()) throw ParseError("scene object must be an object");
            SceneObject o;
            o.shape = shape_from_name(require(oj, "shape").get<std::string>());
            o.color = get_color(require(oj, "color"), "color");
            o.center = {get_number(require(oj, "x"), "x"), get_number(require(oj, "y"), "y")};
            o.radius = get_number(require(oj, "radius"), "radius");
            objs.push_back(o);
        }
        r.scene = std::move(objs);
    }
    const json& seed = require(j, "seed");
    if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<std::int64_t>() >= 0)) {
        throw ParseError("seed must be a non-negative integer");
    }
    r.seed = seed.get<std::uint64_t>();
    if (!r.seen && (!r.image.empty() || r.scene)) throw ParseError("unseen records carry no image or scene");
    return r;
}

std::string sample_id(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%08zu", index);
    return buf;
}

std::string image_path(Task task, std::string_view split, std::string_view id) {
    std::string p(task_name(task));
    p += '/';
    p += split;
    p += '/';
    p += id;
    p += ".png";
    return p;
}

ManifestRecord make_record(const SceneSpec& scene, std::string id, std::string image) {
    ManifestRecord r;
    r.id = std::move(id);
    r.image = std::move(image);
    r.task = scene.task;
    r.variant = scene.variant;
    r.labels = scene.labels;
    r.seen = true;
    r.scene = scene.objects;
    r.seed = scene.seed;
    return r;
}

SceneSpec scene_of(const ManifestRecord& record) {
    if (!record.scene) throw StructuralError("record " + record.id + " has no scene");
    SceneSpec s;
    s.objects = *record.scene;
    s.task = record.task;
    s.variant = record.variant;
    s.labels = record.labels;
    s.seed = record.seed;
    return s;
}

std::string serialize_manifest(std::vector<ManifestRecord> records) {
    std::sort(records.begin(), records.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    for (std::size_t i = 1; i < records.size(); ++i) {
        if (records[i].id == records[i - 1].id) throw ValidationError("duplicate id '" + records[i].id + "'");
    }
    std::string out;
    for (const auto& r : records) {
        out += record_to_json(r).dump();
        out += '\n';
    }
    return out;
}

void write_manifest(const std::filesystem::path& path, std::vector<ManifestRecord> records) {
    write_text_file(path, serialize_manifest(std::move(records)));
}

std::vector<ManifestRecord> parse_manifest(std::string_view text) {
    std::vector<ManifestRecord> records;
    std::set<std::string> ids;
    const auto lines = split_lines(text);
    for (std::size_t n = 0; n < lines.size(); ++n) {
        if (blank(lines[n])) continue;
        const std::string where = "line " + std::to_string(n + 1) + ": ";
        ManifestRecord r;
        try {
            r = record_from_json(json::parse(lines[n]));
        } catch (const json::exception& e) {
            throw ParseError(where + e.what());
        } catch (const ParseError& e) {
            throw ParseError(where + e.what());
        } catch (const ArgumentError& e) {
            throw ParseError(where + e.what());
        }
        if (!ids.insert(r.id).second) throw ValidationError(where + "duplicate id '" + r.id + "'");
        records.push_back(std::move(r));
    }
    return records;
}

std::vector<ManifestRecord> read_manifest(const std::filesystem::path& path) {
    return parse_manifest(read_text_file(path));
}

ConfigValidation validate_config(const json& j) {
    ConfigValidation out;
    auto& v = out.violations;
    if (!j.is_object()) {
        v.push_back("config must be a JSON object");
        return out;
    }
    static const std::set<std::string> known{"task",       "variant", "size",      "distribution",
                                             "diagonals_removed", "resolution", "supersampling",
                                             "seed",       "max_count", "counting_color", "output_dir"};
    for (const auto& [key, value] : j.items()) {
        if (!known.count(key)) v.push_back("unknown key '" + key + "'");
    }

    DatasetConfig c;
    bool have_task = false;
    bool have_size = false;

    auto read_enum = [&](const char* key, auto parse, auto& field) {
        const json* p = find_key(j, key);
        if (!p) return false;
        if (!p->is_string()) {
            v.push_back(std::string(key) + " must be a string");
            return false;
        }
        try {
            field = parse(p->get<std::string>());
            return true;
        } catch (const ArgumentError& e) {
            v.push_back(e.what());
            return false;
        }
    };
    auto read_int = [&](const char* key, auto& field, std::int64_t lo, std::int64_t hi) {
        const json* p = find_key(j, key);
        if (!p) return false;
        if (!p->is_number_integer()) {
            v.push_back(std::string(key) + " must be an integer");
            return false;
        }
        const auto value = p->get<std::int64_t>();
        if (value < lo || value > hi) {
            v.push_back(std::string(key) + " must lie in " + std::to_string(lo) + ".." + std::to_string(hi));
            return false;
        }
        field = static_cast<std::remove_reference_t<decltype(field)>>(value);
        return true;
    };

    have_task = read_enum("task", task_from_name, c.task);
    if (!find_key(j, "task")) v.push_back("task is required");
    read_enum("variant", variant_from_name, c.variant);
    read_enum("distribution", distribution_from_name, c.distribution);
    have_size = read_int("size", c.size, 1, std::int64_t{1} << 40);
    if (!find_key(j, "size")) v.push_back("size is required");
    read_int("diagonals_removed", c.diagonals_removed, 0, kPaletteSize - 1);
    read_int("resolution", c.resolution, 8, kMaxSuperResolution);
    read_int("supersampling", c.supersampling, 1, 64);
    read_int("max_count", c.max_count, 1, kMaxSupportedCount);
    if (const json* seed = find_key(j, "seed")) {
        if (seed->is_number_unsigned()) c.seed = seed->get<std::uint64_t>();
        else if (seed->is_number_integer() && seed->get<std::int64_t>() >= 0) c.seed = seed->get<std::uint64_t>();
        else v.push_back("seed must be a non-negative integer");
    }
    if (read_enum("counting_color", color_from_name, c.counting_color) && c.counting_color == Color::Brown) {
        v.push_back("counting_color must be a palette color");
    }
    if (const json* dir = find_key(j, "output_dir")) {
        if (dir->is_string() && !dir->get<std::string>().empty()) c.output_dir = dir->get<std::string>();
        else v.push_back("output_dir must be a non-empty string");
    }
    if (static_cast<long>(c.resolution) * c.supersampling > kMaxSuperResolution) {
        v.push_back("resolution x supersampling exceeds 4096");
    }

    if (have_task) {
        const bool variant_ok = [&] {
            switch (c.task) {
                case Task::Attribution: return c.variant == Variant::Base || c.variant == Variant::Complex;
                case Task::SpatialRelations: return true;
                case Task::Counting: return c.variant != Variant::Complex;
            }
            return false;
        }();
        if (!variant_ok) {
            v.push_back("variant '" + std::string(variant_name(c.variant)) + "' is not defined for task '" +
                        std::string(task_name(c.task)) + "'");
        }
    }

    const bool has_grid = have_task && ((c.task == Task::Attribution && c.variant == Variant::Base) ||
                                        c.variant == Variant::Composition);
    if (c.diagonals_removed > 0 && have_task && !has_grid) {
        v.push_back("hold-out requires a composition grid");
    }
    if (have_task && c.task == Task::Counting) {
        if ((c.variant == Variant::Grid || c.variant == Variant::Composition) && c.max_count != kDefaultMaxCount) {
            v.push_back("grid and composition counting require max_count 10");
        }
    }
    int classes = 0;
    if (have_task) {
        DatasetConfig probe = c;
        classes = concept_grid_size(probe) ? kPaletteSize * (kPaletteSize - c.diagonals_removed)
                                           : marginal_class_count(probe);
    }
    if (c.distribution == Distribution::Skewed) {
        const bool ten_class = have_task && !concept_grid_size(c) && marginal_class_count(c) == 10;
        if (have_task && !ten_class) v.push_back("skewed distribution requires a 10-class task");
        if (!have_task) classes = 10;
    }
    if (have_size && classes > 0 && c.size < classes) v.push_back("size below class count");

    if (v.empty()) out.config = c;
    return out;
}

ordered_json config_to_json(const DatasetConfig& c) {
    ordered_json j;
    j["task"] = task_name(c.task);
    j["variant"] = variant_name(c.variant);
    j["size"] = c.size;
    j["distribution"] = distribution_name(c.distribution);
    j["diagonals_removed"] = c.diagonals_removed;
    j["resolution"] = c.resolution;
    j["supersampling"] = c.supersampling;
    j["seed"] = c.seed;
    j["max_count"] = c.max_count;
    j["counting_color"] = color_name(c.counting_color);
    j["output_dir"] = c.output_dir;
    return j;
}

std::string_view head_name(Head h) {
    switch (h) {
        case Head::Count: return "count";
        case Head::Relation: return "relation";
        case Head::Attribution: return "attribution";
        case Head::Color: return "color";
    }
    return "?";
}

Head head_from_name(std::string_view name) {
    if (name == "count") return Head::Count;
    if (name == "relation") return Head::Relation;
    if (name == "attribution") return Head::Attribution;
    if (name == "color") return Head::Color;
    throw ValidationError("unknown head '" + std::string(name) + "'");
}

HeadRange head_range(Head h) {
    switch (h) {
        case Head::Count: return {1, kMaxSupportedCount};
        case Head::Relation: return {1, kSectorCount};
        case Head::Attribution: return {0, kPaletteSize * kPaletteSize - 1};
        case Head::Color: return {0, kPaletteSize - 1};
    }
    return {0, 0};
}

std::optional<int> true_class(const ConditionLabel& label, Head head) {
    switch (head) {
        case Head::Count: return label.count;
        case Head::Relation: return label.relation_sector;
        case Head::Attribution:
            if (!label.sphere_color || !label.cube_color) return std::nullopt;
            return color_index(*label.sphere_color) * kPaletteSize + color_index(*label.cube_color);
        case Head::Color:
            if (!label.object_color) return std::nullopt;
            return color_index(*label.object_color);
    }
    return std::nullopt;
}

std::vector<Head> default_heads(Task task, Variant variant) {
    std::vector<Head> heads;
    switch (task) {
        case Task::Attribution: heads.push_back(Head::Attribution); break;
        case Task::SpatialRelations: heads.push_back(Head::Relation); break;
        case Task::Counting: heads.push_back(Head::Count); break;
    }
    if (task != Task::Attribution && variant == Variant::Composition) heads.push_back(Head::Color);
    return heads;
}

ordered_json prediction_to_json(const PredictionRecord& r) {
    ordered_json j;
    j["id"] = r.id;
    j["true_labels"] = label_to_json(r.true_labels);
    ordered_json pred = ordered_json::object();
    for (const auto& [head, value] : r.predicted) {
        pred[std::string(head_name(head))] = value ? ordered_json(*value) : ordered_json(nullptr);
    }
    j["predicted"] = std::move(pred);
    j["image"] = r.image;
    return j;
}

PredictionRecord prediction_from_json(const json& j) {
    if (!j.is_object()) throw ParseError("prediction must be a JSON object");
    PredictionRecord r;
    const json& id = require(j, "id");
    if (!id.is_string() || id.get<std::string>().empty()) throw ParseError("id must be a non-empty string");
    r.id = id.get<std::string>();
    try {
        r.true_labels = label_from_json(require(j, "true_labels"));
    } catch (const ArgumentError& e) {
        throw ParseError(e.what());
    }
    const json& pred = require(j, "predicted");
    if (!pred.is_object()) throw ParseError("predicted must be an object");
    for (const auto& [key, value] : pred.items()) {
        const Head head = head_from_name(key);
        if (value.is_null()) {
            r.predicted[head] = std::nullopt;
            continue;
        }
        if (!value.is_number_integer()) throw ParseError("predicted." + key + " must be an integer or null");
        const int cls = value.get<int>();
        const HeadRange range = head_range(head);
        if (cls < range.lo || cls > range.hi) {
            throw ValidationError("predicted." + key + " = " + std::to_string(cls) + " outside " +
                                  std::to_string(range.lo) + ".." + std::to_string(range.hi));
        }
        r.predicted[head] = cls;
    }
    if (const json* image = find_key(j, "image")) {
        if (!image->is_string()) throw ParseError("image must be a string");
        r.image = image->get<std::string>();
    }
    return r;
}

PredictionSet parse_predictions(std::string_view text) {
    PredictionSet set;
    std::set<std::string> ids;
    const auto lines = split_lines(text);
    for (std::size_t n = 0; n < lines.size(); ++n) {
        if (blank(lines[n])) continue;
        const std::string where = "line " + std::to_string(n + 1) + ": ";
        PredictionRecord r;
        try {
            r = prediction_from_json(json::parse(lines[n]));
        } catch (const json::exception& e) {
            throw ParseError(where + e.what());
        } catch (const ParseError& e) {
            throw ParseError(where + e.what());
        } catch (const ValidationError& e) {
            throw ValidationError(where + e.what());
        }
        if (!ids.insert(r.id).second) throw ValidationError(where + "duplicate id '" + r.id + "'");
        ++set.per_condition[condition_key(r.true_labels)];
        set.records.push_back(std::move(r));
    }
    if (set.records.empty()) set.warnings.push_back("prediction file is empty");
    return set;
}

PredictionSet read_predictions(const std::filesystem::path& path) {
    return parse_predictions(read_text_file(path));
}

void write_predictions(const std::filesystem::path& path, const std::vector<PredictionRecord>& records) {
    std::string out;
    for (const auto& r : records) {
        out += prediction_to_json(r).dump();
        out += '\n';
    }
    write_text_file(path, out);
}

void write_frequency_csv(const std::filesystem::path& path,
                         const std::vector<std::pair<std::string, std::int64_t>>& rows) {
    std::string out = "class,count\n";
    for (const auto& [cls, count] : rows) out += cls + "," + std::to_string(count) + "\n";
    write_text_file(path, out);
}

std::vector<std::pair<std::string, std::int64_t>> read_frequency_csv(const std::filesystem::path& path) {
    const auto lines = split_lines(read_text_file(path));
    if (lines.empty() || lines.front() != "class,count") throw ParseError("missing class,count header");
    std::vector<std::pair<std::string, std::int64_t>> rows;
    for (std::size_t n = 1; n < lines.size(); ++n) {
        if (lines[n].empty()) continue;
        const auto comma = lines[n].rfind(',');
        if (comma == std::string::npos) throw ParseError("line " + std::to_string(n + 1) + ": expected class,count");
        try {
            rows.emplace_back(lines[n].substr(0, comma), std::stoll(lines[n].substr(comma + 1)));
        } catch (const std::logic_error&) {
            throw ParseError("line " + std::to_string(n + 1) + ": bad count");
        }
    }
    return rows;
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace mosaic
