#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "mosaic/sampler.hpp"
#include "mosaic/scene.hpp"

namespace mosaic {

using ordered_json = nlohmann::ordered_json;

/// One manifest row. Held-out (seen=false) rows carry labels only: no image
/// and no scene.
struct ManifestRecord {
    std::string id;
    std::string image;
    Task task = Task::Counting;
    Variant variant = Variant::Base;
    ConditionLabel labels;
    bool seen = true;
    std::optional<std::vector<SceneObject>> scene;
    std::uint64_t seed = 0;

    friend bool operator==(const ManifestRecord&, const ManifestRecord&) = default;
};

ordered_json label_to_json(const ConditionLabel& label);
ConditionLabel label_from_json(const nlohmann::json& j);

ordered_json record_to_json(const ManifestRecord& record);
ManifestRecord record_from_json(const nlohmann::json& j);

/// Sample id for index i: eight zero-padded digits.
std::string sample_id(std::size_t index);
/// Relative image path `<task>/<split>/<id>.png`.
std::string image_path(Task task, std::string_view split, std::string_view id);

ManifestRecord make_record(const SceneSpec& scene, std::string id, std::string image);
SceneSpec scene_of(const ManifestRecord& record);

/// Canonical JSON-Lines: one record per line sorted by id, keys in fixed order.
/// Throws ValidationError on duplicate ids.
void write_manifest(const std::filesystem::path& path, std::vector<ManifestRecord> records);
std::string serialize_manifest(std::vector<ManifestRecord> records);
/// Throws ParseError (with the 1-based line number) or ValidationError.
std::vector<ManifestRecord> read_manifest(const std::filesystem::path& path);
std::vector<ManifestRecord> parse_manifest(std::string_view text);

struct ConfigValidation {
    std::optional<DatasetConfig> config;
    std::vector<std::string> violations;
    bool ok() const { return violations.empty(); }
};

/// Collects every violation rather than stopping at the first.
ConfigValidation validate_config(const nlohmann::json& j);
ordered_json config_to_json(const DatasetConfig& config);

// Classifier heads of the evaluation protocol.
enum class Head : std::uint8_t { Count, Relation, Attribution, Color };

std::string_view head_name(Head h);
Head head_from_name(std::string_view name);

struct HeadRange {
    int lo;
    int hi;  // inclusive
    int size() const { return hi - lo + 1; }
};

/// Count classes are object counts 1..20, relation classes sectors 1..10,
/// attribution classes sphere*10+cube in 0..99, color classes palette 0..9.
HeadRange head_range(Head h);
/// Ground-truth class of `label` under `head`, if the label has that concept.
std::optional<int> true_class(const ConditionLabel& label, Head head);
/// Heads evaluated for a task and variant.
std::vector<Head> default_heads(Task task, Variant variant);

struct PredictionRecord {
    std::string id;
    ConditionLabel true_labels;
    /// Predicted class per head; nullopt marks an unreadable sample.
    std::map<Head, std::optional<int>> predicted;
    std::string image;

    friend bool operator==(const PredictionRecord&, const PredictionRecord&) = default;
};

struct PredictionSet {
    std::vector<PredictionRecord> records;
    std::map<std::string, std::int64_t> per_condition;
    std::vector<std::string> warnings;
};

ordered_json prediction_to_json(const PredictionRecord& record);
PredictionRecord prediction_from_json(const nlohmann::json& j);

/// Throws ParseError / ValidationError (unknown head, class out of range,
/// duplicate id). An empty file yields an empty set with a warning.
PredictionSet read_predictions(const std::filesystem::path& path);
PredictionSet parse_predictions(std::string_view text);
void write_predictions(const std::filesystem::path& path, const std::vector<PredictionRecord>& records);

/// `class,count` CSV used by the caption miner.
void write_frequency_csv(const std::filesystem::path& path,
                         const std::vector<std::pair<std::string, std::int64_t>>& rows);
std::vector<std::pair<std::string, std::int64_t>> read_frequency_csv(const std::filesystem::path& path);

/// Writes text with LF endings, replacing the file.
void write_text_file(const std::filesystem::path& path, std::string_view text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace mosaic
