#include <algorithm>
#include <fstream>

#include "doctest.h"
#include "mosaic/dataset_io.hpp"
#include "temp_dir.hpp"

using namespace mosaic;
using nlohmann::json;

namespace {

bool has_violation(const ConfigValidation& v, const std::string& text) {
    return std::any_of(v.violations.begin(), v.violations.end(),
                       [&](const std::string& s) { return s.find(text) != std::string::npos; });
}

ManifestRecord counting_record(const std::string& id, int count) {
    ManifestRecord r;
    r.id = id;
    r.image = "counting/train/" + id + ".png";
    r.task = Task::Counting;
    r.labels.count = count;
    r.scene = std::vector<SceneObject>{{Shape::Sphere, Color::Gray, {0.25, 0.75}, 0.06}};
    r.seed = 7;
    return r;
}

std::string prediction_line(const std::string& id, int true_count, const std::string& predicted) {
    return R"({"id":")" + id + R"(","true_labels":{"count":)" + std::to_string(true_count) +
           R"(},"predicted":)" + predicted + R"(,"image":"gen/)" + id + R"(.png"})" + "\n";
}

}  // namespace

TEST_CASE("empty manifest round-trips") {
    CHECK(serialize_manifest({}).empty());
    CHECK(parse_manifest("").empty());
}

TEST_CASE("manifest is sorted by id with keys in fixed order") {
    const std::string text = serialize_manifest({counting_record("c", 3), counting_record("a", 1), counting_record("b", 2)});
    const auto first_line = text.substr(0, text.find('\n'));
    CHECK(first_line ==
          R"({"id":"a","image":"counting/train/a.png","task":"counting","variant":"base","labels":{"count":1},)"
          R"("seen":true,"scene":[{"shape":"sphere","color":"GRAY","x":0.25,"y":0.75,"radius":0.06}],"seed":7})");
    const auto parsed = parse_manifest(text);
    REQUIRE(parsed.size() == 3);
    CHECK(parsed[0].id == "a");
    CHECK(parsed[1].id == "b");
    CHECK(parsed[2].id == "c");
    CHECK(std::count(text.begin(), text.end(), '\n') == 3);
}

TEST_CASE("unseen records carry labels only") {
    ManifestRecord r;
    r.id = "unseen-00000000";
    r.task = Task::Attribution;
    r.labels.sphere_color = Color::Red;
    r.labels.cube_color = Color::Red;
    r.seen = false;
    const std::string text = serialize_manifest({r});
    CHECK(text.find(R"("image":null)") != std::string::npos);
    CHECK(text.find(R"("scene":null)") != std::string::npos);
    CHECK(text.find(R"("labels":{"sphere_color":"RED","cube_color":"RED"})") != std::string::npos);
    CHECK(parse_manifest(text).front() == r);
}

TEST_CASE("1000-record counting manifest round-trips field for field") {
    DatasetConfig config;
    config.task = Task::Counting;
    config.size = 1000;
    config.seed = 3;
    const auto scenes = build_dataset(config, 2);
    std::vector<ManifestRecord> records;
    for (std::size_t i = 0; i < scenes.size(); ++i) {
        records.push_back(make_record(scenes[i], sample_id(i), image_path(config.task, "train", sample_id(i))));
    }
    testing::TempDir dir;
    write_manifest(dir / "manifest.jsonl", records);
    const auto back = read_manifest(dir / "manifest.jsonl");
    REQUIRE(back.size() == records.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        REQUIRE(back[i] == records[i]);
        const SceneSpec s = scene_of(back[i]);
        REQUIRE(s.objects == scenes[i].objects);
        REQUIRE(s.labels == scenes[i].labels);
    }
    const std::string text = read_text_file(dir / "manifest.jsonl");
    CHECK(serialize_manifest(parse_manifest(text)) == text);
    for (const auto& r : back) CHECK(r.image.rfind("counting/train/", 0) == 0);
}

TEST_CASE("manifest errors") {
    CHECK_THROWS_AS(serialize_manifest({counting_record("a", 1), counting_record("a", 2)}), ValidationError);
    const std::string good = serialize_manifest({counting_record("a", 1)});
    try {
        parse_manifest(good + "{not json}\n");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_manifest(good + good), ValidationError);
    CHECK_THROWS_AS(parse_manifest(R"({"id":"x","image":null,"task":"juggling","variant":"base","labels":{},"seen":true,"scene":null,"seed":0})"),
                    ParseError);
}

TEST_CASE("validate_config examples") {
    const auto ok = validate_config(json::parse(R"({"task":"counting","variant":"base","size":2000,"distribution":"uniform","seed":7})"));
    CHECK(ok.ok());
    REQUIRE(ok.config);
    CHECK(ok.config->size == 2000);
    CHECK(ok.config->seed == 7);
    CHECK(ok.config->resolution == 128);

    const auto holdout = validate_config(json::parse(R"({"task":"counting","variant":"base","diagonals_removed":3})"));
    CHECK(has_violation(holdout, "hold-out requires a composition grid"));
    CHECK(has_violation(holdout, "size is required"));

    const auto skew = validate_config(json::parse(R"({"distribution":"skewed","size":5})"));
    CHECK(has_violation(skew, "size below class count"));
    CHECK(has_violation(skew, "task is required"));
}

TEST_CASE("validate_config collects every violation") {
    const auto v = validate_config(json::parse(
        R"({"task":"attribution","variant":"grid","size":0,"distribution":"skewed","resolution":2048,"supersampling":4,"colour":1})"));
    CHECK(has_violation(v, "unknown key 'colour'"));
    CHECK(has_violation(v, "variant 'grid' is not defined for task 'attribution'"));
    CHECK(has_violation(v, "size must lie in"));
    CHECK(has_violation(v, "skewed distribution requires a 10-class task"));
    CHECK(has_violation(v, "resolution x supersampling exceeds 4096"));
    CHECK(v.violations.size() >= 5);
    CHECK_FALSE(v.config);

    CHECK(validate_config(json::parse(R"({"task":"counting","variant":"composition","size":1000,"diagonals_removed":3})")).ok());
    CHECK(validate_config(json::parse(R"({"task":"attribution","size":1000,"diagonals_removed":9})")).ok());
    CHECK(has_violation(validate_config(json::parse(R"({"task":"attribution","size":49,"diagonals_removed":5})")),
                        "size below class count"));
    CHECK(has_violation(validate_config(json::parse(R"({"task":"counting","variant":"grid","size":100,"max_count":20})")),
                        "max_count 10"));
    CHECK(has_violation(validate_config(json::parse("[1,2]")), "JSON object"));
}

TEST_CASE("config json round-trips through validation") {
    DatasetConfig c;
    c.task = Task::SpatialRelations;
    c.variant = Variant::Composition;
    c.size = 4321;
    c.diagonals_removed = 3;
    c.seed = 99;
    c.output_dir = "out/x";
    const auto v = validate_config(json::parse(config_to_json(c).dump()));
    REQUIRE(v.ok());
    CHECK(config_to_json(*v.config) == config_to_json(c));
}

TEST_CASE("heads and classes") {
    CHECK(head_range(Head::Count).lo == 1);
    CHECK(head_range(Head::Count).hi == 20);
    CHECK(head_range(Head::Relation).size() == 10);
    CHECK(head_range(Head::Attribution).size() == 100);
    CHECK(head_range(Head::Color).size() == 10);
    CHECK_THROWS_AS(head_from_name("shape"), ValidationError);

    ConditionLabel l;
    l.sphere_color = Color::Green;
    l.cube_color = Color::Black;
    CHECK(true_class(l, Head::Attribution) == 19);
    CHECK_FALSE(true_class(l, Head::Count).has_value());
    ConditionLabel c;
    c.count = 4;
    c.object_color = Color::Cyan;
    CHECK(true_class(c, Head::Count) == 4);
    CHECK(true_class(c, Head::Color) == 6);

    CHECK(default_heads(Task::Counting, Variant::Base) == std::vector<Head>{Head::Count});
    CHECK(default_heads(Task::Counting, Variant::Composition) == std::vector<Head>{Head::Count, Head::Color});
    CHECK(default_heads(Task::SpatialRelations, Variant::Composition) == std::vector<Head>{Head::Relation, Head::Color});
    CHECK(default_heads(Task::Attribution, Variant::Base) == std::vector<Head>{Head::Attribution});
}

TEST_CASE("read_predictions reports per-condition counts") {
    std::string text;
    for (int i = 0; i < 50; ++i) text += prediction_line("g" + std::to_string(i), 3, R"({"count":3})");
    const auto set = parse_predictions(text);
    CHECK(set.records.size() == 50);
    CHECK(set.per_condition == std::map<std::string, std::int64_t>{{"count_3", 50}});
    CHECK(set.warnings.empty());
}

TEST_CASE("read_predictions validation") {
    CHECK_THROWS_AS(parse_predictions(prediction_line("a", 3, R"({"count":25})")), ValidationError);
    CHECK_THROWS_AS(parse_predictions(prediction_line("a", 3, R"({"count":0})")), ValidationError);
    CHECK_THROWS_AS(parse_predictions(prediction_line("a", 3, R"({"shape":1})")), ValidationError);
    CHECK_THROWS_AS(parse_predictions(prediction_line("a", 3, "{}") + prediction_line("a", 3, "{}")), ValidationError);
    CHECK_THROWS_AS(parse_predictions("{\"id\":\n"), ParseError);
    CHECK(parse_predictions(prediction_line("a", 3, R"({"count":20})")).records.size() == 1);
    const auto nulls = parse_predictions(prediction_line("a", 3, R"({"count":null})"));
    CHECK_FALSE(nulls.records[0].predicted.at(Head::Count).has_value());
}

TEST_CASE("empty predictions file warns") {
    testing::TempDir dir;
    write_text_file(dir / "p.jsonl", "");
    const auto set = read_predictions(dir / "p.jsonl");
    CHECK(set.records.empty());
    CHECK(set.warnings.size() == 1);
}

TEST_CASE("predictions round-trip") {
    PredictionRecord r;
    r.id = "x1";
    r.true_labels.relation_sector = 4;
    r.true_labels.object_color = Color::White;
    r.predicted[Head::Relation] = 4;
    r.predicted[Head::Color] = 2;
    r.image = "gen/sector_4_WHITE/0.png";
    testing::TempDir dir;
    write_predictions(dir / "p.jsonl", {r});
    const auto text = read_text_file(dir / "p.jsonl");
    CHECK(text == R"({"id":"x1","true_labels":{"relation_sector":4,"object_color":"WHITE"},"predicted":{"relation":4,"color":2},"image":"gen/sector_4_WHITE/0.png"})"
                  "\n");
    CHECK(read_predictions(dir / "p.jsonl").records.front() == r);
}

TEST_CASE("frequency csv round-trip") {
    testing::TempDir dir;
    const std::vector<std::pair<std::string, std::int64_t>> rows{{"1", 4}, {"2", 0}, {"10", 12}};
    write_frequency_csv(dir / "freq.csv", rows);
    CHECK(read_text_file(dir / "freq.csv") == "class,count\n1,4\n2,0\n10,12\n");
    CHECK(read_frequency_csv(dir / "freq.csv") == rows);
    write_text_file(dir / "bad.csv", "label,n\n");
    CHECK_THROWS_AS(read_frequency_csv(dir / "bad.csv"), ParseError);
}
