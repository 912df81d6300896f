#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <map>
#include <thread>

#include "doctest.h"
#include "mosaic/cli.hpp"
#include "mosaic/dataset_io.hpp"
#include "mosaic/metrics.hpp"
#include "mosaic/miner.hpp"
#include "mosaic/render.hpp"
#include "temp_dir.hpp"

using namespace mosaic;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = MOSAIC_FIXTURE_DIR;

int run(std::vector<std::string> args) {
    args.insert(args.begin(), {"mosaic", "--quiet"});
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    return run_cli(static_cast<int>(argv.size()), argv.data());
}

void write_config(const fs::path& path, const std::string& json) { write_text_file(path, json); }

std::vector<std::vector<std::string>> csv(const fs::path& path) {
    std::vector<std::vector<std::string>> rows;
    std::ifstream in(path);
    for (std::string line; std::getline(in, line);) {
        std::vector<std::string> cells;
        std::size_t s = 0;
        for (;;) {
            const auto c = line.find(',', s);
            cells.push_back(line.substr(s, c == std::string::npos ? std::string::npos : c - s));
            if (c == std::string::npos) break;
            s = c + 1;
        }
        rows.push_back(cells);
    }
    return rows;
}

std::map<std::string, std::string> tree_bytes(const fs::path& root, bool skip_run_json = true) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (!e.is_regular_file()) continue;
        if (skip_run_json && e.path().filename() == "run.json") continue;
        out[e.path().lexically_relative(root).generic_string()] = read_text_file(e.path());
    }
    return out;
}

std::size_t count_of(const std::string& hay, const std::string& needle) {
    std::size_t n = 0;
    for (auto p = hay.find(needle); p != std::string::npos; p = hay.find(needle, p + 1)) ++n;
    return n;
}

void write_report_dir(const fs::path& dir, const std::string& distribution, std::int64_t size, double acc,
                      double mem, const std::vector<std::string>& heads = {"count"}) {
    std::string a = "split,head,n,correct,accuracy\n";
    for (const auto& h : heads) a += "all," + h + ",100," + std::to_string(int(acc * 100)) + "," + format_double(acc) + "\n";
    write_text_file(dir / "accuracy.csv", a);
    write_text_file(dir / "memorization_summary.csv",
                    "n,memorized,rate,k,mean_d1,distance_space\n100,0,0," + format_double(mem) + ",1,x\n");
    nlohmann::ordered_json meta;
    meta["dataset"] = {{"task", "counting"}, {"variant", "base"}, {"distribution", distribution}, {"size", size}};
    write_run_metadata(dir, "evaluate", meta);
    // Summary rate column is the third one.
    write_text_file(dir / "memorization_summary.csv",
                    "n,memorized,rate,k,mean_d1,distance_space\n100,50," + format_double(mem) + ",0.3333333333333333,1,x\n");
}

}  // namespace

TEST_CASE("sha256 and number formatting") {
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(1.0 / 3.0) == "0.3333333333333333");
    CHECK(format_double(1.0) == "1");
}

TEST_CASE("usage errors exit 2") {
    CHECK(run({}) == kExitUsage);
    CHECK(run({"paint"}) == kExitUsage);
    CHECK(run({"evaluate", "--manifest", "x"}) == kExitUsage);
    CHECK(run({"mine", "--input", "x", "--mode", "colour"}) == kExitUsage);
    CHECK(run({"--help"}) == kExitOk);
}

TEST_CASE("generate counting base uniform 2000") {
    testing::TempDir dir;
    write_config(dir / "c.json", R"({"task":"counting","variant":"base","size":2000,"distribution":"uniform","seed":7,"output_dir":"ds"})");
    REQUIRE(run({"--root", dir.path().string(), "generate", "c.json"}) == kExitOk);
    const auto manifest = read_manifest(dir / "ds/manifest.jsonl");
    CHECK(manifest.size() == 2000);
    std::size_t pngs = 0;
    for (const auto& e : fs::recursive_directory_iterator(dir / "ds")) pngs += e.path().extension() == ".png";
    CHECK(pngs == 2000);
    std::map<int, int> per;
    for (const auto& r : manifest) {
        ++per[*r.labels.count];
        REQUIRE(fs::exists(dir / "ds" / r.image));
    }
    for (int c = 1; c <= 10; ++c) CHECK(per[c] == 200);
    CHECK_FALSE(fs::exists(dir / "ds/unseen.jsonl"));

    const auto meta = read_run_metadata(dir / "ds");
    REQUIRE(meta.contains("generate"));
    const auto& g = meta["generate"];
    CHECK(g["toolkit_version"] == std::string(kToolkitVersion));
    CHECK(g["seed"] == 7);
    CHECK(g["config_hash"].get<std::string>().size() == 64);
    CHECK(g["config_hash"] == sha256_hex(g["config"].dump()));
    CHECK(g.contains("wall_time_seconds"));
    CHECK(g["warnings"].empty());

    const auto img = read_png(dir / "ds" / manifest.front().image);
    CHECK(img.width == 128);
    CHECK(img == render_scene(scene_of(manifest.front())));
}

TEST_CASE("invalid config exits 2 and writes nothing") {
    testing::TempDir dir;
    write_config(dir / "c.json", R"({"task":"counting","variant":"base","size":2000,"diagonals_removed":3,"output_dir":"ds"})");
    CHECK(run({"--root", dir.path().string(), "generate", "c.json"}) == kExitUsage);
    CHECK_FALSE(fs::exists(dir / "ds"));
    write_config(dir / "bad.json", "{not json");
    CHECK(run({"--root", dir.path().string(), "generate", "bad.json"}) == kExitUsage);
    CHECK(run({"--root", dir.path().string(), "generate", "missing.json"}) == kExitUsage);
    CHECK_FALSE(fs::exists(dir / "ds"));
}

TEST_CASE("composition generate lists unseen conditions") {
    testing::TempDir dir;
    write_config(dir / "c.json", R"({"task":"attribution","size":500,"diagonals_removed":5,"seed":1,"output_dir":"ds"})");
    REQUIRE(run({"--root", dir.path().string(), "generate", "c.json"}) == kExitOk);
    const auto seen = read_manifest(dir / "ds/manifest.jsonl");
    const auto unseen = read_manifest(dir / "ds/unseen.jsonl");
    CHECK(seen.size() == 500);
    CHECK(unseen.size() == 50);
    for (const auto& r : unseen) {
        CHECK_FALSE(r.seen);
        CHECK(r.image.empty());
        CHECK_FALSE(r.scene.has_value());
        CHECK(diagonal_index(color_index(*r.labels.sphere_color), color_index(*r.labels.cube_color), 10) <= 5);
    }
    for (const auto& r : seen) {
        CHECK(diagonal_index(color_index(*r.labels.sphere_color), color_index(*r.labels.cube_color), 10) > 5);
    }
}

TEST_CASE("thread count and reruns never change output bytes") {
    testing::TempDir dir;
    write_config(dir / "a.json", R"({"task":"spatial_relations","variant":"complex","size":150,"seed":5,"output_dir":"a"})");
    write_config(dir / "b.json", R"({"task":"spatial_relations","variant":"complex","size":150,"seed":5,"output_dir":"b"})");
    REQUIRE(run({"--root", dir.path().string(), "--threads", "1", "generate", "a.json"}) == kExitOk);
    REQUIRE(run({"--root", dir.path().string(), "--threads", "6", "generate", "b.json"}) == kExitOk);
    CHECK(tree_bytes(dir / "a") == tree_bytes(dir / "b"));
    const auto before = tree_bytes(dir / "a");
    REQUIRE(run({"--root", dir.path().string(), "--threads", "3", "generate", "a.json"}) == kExitOk);
    CHECK(tree_bytes(dir / "a") == before);

    auto ma = read_run_metadata(dir / "a")["generate"];
    auto mb = read_run_metadata(dir / "b")["generate"];
    CHECK(ma["workers"] == 3);
    CHECK(mb["workers"] == 6);
    for (auto* m : {&ma, &mb}) {
        m->erase("workers");
        m->erase("wall_time_seconds");
        (*m)["config"].erase("output_dir");
        m->erase("config_hash");
    }
    CHECK(ma == mb);
}

TEST_CASE("seed override replaces the configured seed") {
    testing::TempDir dir;
    write_config(dir / "c.json", R"({"task":"counting","size":20,"seed":5,"output_dir":"ds"})");
    REQUIRE(run({"--root", dir.path().string(), "--seed-override", "77", "generate", "c.json"}) == kExitOk);
    CHECK(read_manifest(dir / "ds/manifest.jsonl").front().seed == 77);
    CHECK(read_run_metadata(dir / "ds")["generate"]["seed"] == 77);
}

TEST_CASE("evaluate the 30-record fixture") {
    testing::TempDir dir;
    write_config(dir / "c.json", R"({"task":"counting","variant":"composition","size":100,"seed":2,"output_dir":"ds"})");
    REQUIRE(run({"--root", dir.path().string(), "generate", "c.json"}) == kExitOk);
    const auto fixture = (kFixtures / "predictions_30.jsonl").string();
    REQUIRE(run({"--root", dir.path().string(), "evaluate", "--manifest", "ds/manifest.jsonl", "--predictions", fixture,
                 "--out", "rep"}) == kExitOk);

    const auto preds = read_predictions(fixture).records;
    const auto acc = csv(dir / "rep/accuracy.csv");
    REQUIRE(acc.size() == 5);  // header + (all, seen) x (count, color)
    CHECK(acc[0] == std::vector<std::string>{"split", "head", "n", "correct", "accuracy"});
    CHECK(acc[1] == std::vector<std::string>{"all", "count", "30", "24", format_double(accuracy(preds, Head::Count).overall)});
    CHECK(acc[2] == std::vector<std::string>{"all", "color", "30", "25", format_double(25.0 / 30.0)});
    CHECK(acc[3][0] == "seen");
    const auto joint = csv(dir / "rep/joint.csv");
    REQUIRE(joint.size() == 3);
    CHECK(joint[1] == std::vector<std::string>{"all", "count+color", "30", "21", format_double(0.7)});
    const auto per_class = csv(dir / "rep/per_class.csv");
    CHECK(std::find(per_class.begin(), per_class.end(),
                    std::vector<std::string>{"all", "count", "1", "6", "4", format_double(4.0 / 6.0)}) != per_class.end());
    const auto confusion = csv(dir / "rep/confusion.csv");
    CHECK(std::find(confusion.begin(), confusion.end(), std::vector<std::string>{"all", "count", "1", "2", "2"}) !=
          confusion.end());
    const auto meta = read_run_metadata(dir / "rep");
    CHECK(meta["evaluate"]["dataset"]["task"] == "counting");
}

TEST_CASE("single-head evaluation emits no joint.csv") {
    testing::TempDir dir;
    write_config(dir / "c.json", R"({"task":"counting","size":50,"seed":2,"output_dir":"ds"})");
    REQUIRE(run({"--root", dir.path().string(), "generate", "c.json"}) == kExitOk);
    std::vector<PredictionRecord> preds;
    for (const auto& r : read_manifest(dir / "ds/manifest.jsonl")) {
        PredictionRecord p;
        p.id = r.id;
        p.true_labels = r.labels;
        p.predicted[Head::Count] = *r.labels.count;
        p.image = r.image;
        preds.push_back(p);
    }
    write_predictions(dir / "p.jsonl", preds);
    REQUIRE(run({"--root", dir.path().string(), "evaluate", "--manifest", "ds/manifest.jsonl", "--predictions",
                 "p.jsonl", "--out", "rep"}) == kExitOk);
    CHECK_FALSE(fs::exists(dir / "rep/joint.csv"));
    CHECK(csv(dir / "rep/accuracy.csv")[1] == std::vector<std::string>{"all", "count", "50", "50", "1"});
}

TEST_CASE("unseen-only predictions populate only the unseen split") {
    testing::TempDir dir;
    write_config(dir / "c.json",
                 R"({"task":"counting","variant":"composition","size":100,"diagonals_removed":3,"seed":2,"output_dir":"ds"})");
    REQUIRE(run({"--root", dir.path().string(), "generate", "c.json"}) == kExitOk);
    std::vector<PredictionRecord> preds;
    int i = 0;
    for (const auto& r : read_manifest(dir / "ds/unseen.jsonl")) {
        PredictionRecord p;
        p.id = "g" + std::to_string(i++);
        p.true_labels = r.labels;
        p.predicted[Head::Count] = *r.labels.count;
        p.predicted[Head::Color] = 0;
        preds.push_back(p);
    }
    write_predictions(dir / "p.jsonl", preds);
    REQUIRE(run({"--root", dir.path().string(), "evaluate", "--manifest", "ds/manifest.jsonl", "--predictions",
                 "p.jsonl", "--out", "rep"}) == kExitOk);
    const auto acc = csv(dir / "rep/accuracy.csv");
    for (const auto& row : acc) CHECK(row[0] != "seen");
    CHECK(std::count_if(acc.begin(), acc.end(), [](const auto& r) { return r[0] == "unseen"; }) == 2);
    CHECK(acc[1] == std::vector<std::string>{"all", "count", "30", "30", "1"});
}

TEST_CASE("evaluate lists join failures") {
    testing::TempDir dir;
    write_config(dir / "c.json", R"({"task":"counting","size":20,"seed":2,"output_dir":"ds"})");
    REQUIRE(run({"--root", dir.path().string(), "generate", "c.json"}) == kExitOk);
    write_text_file(dir / "p.jsonl", R"({"id":"a","true_labels":{"count":15},"predicted":{"count":15},"image":""})"
                                     "\n");
    CHECK(run({"--root", dir.path().string(), "evaluate", "--manifest", "ds/manifest.jsonl", "--predictions",
               "p.jsonl", "--out", "rep"}) == kExitFailure);
    write_text_file(dir / "q.jsonl", R"({"id":"a","true_labels":{"count":1},"predicted":{"relation":1},"image":""})"
                                     "\n");
    CHECK(run({"--root", dir.path().string(), "evaluate", "--manifest", "ds/manifest.jsonl", "--predictions",
               "q.jsonl", "--out", "rep"}) == kExitFailure);
    CHECK(run({"--root", dir.path().string(), "evaluate", "--manifest", "ds/manifest.jsonl", "--predictions",
               "q.jsonl", "--heads", "count,shape"}) == kExitUsage);
}

TEST_CASE("memorization of exact copies") {
    testing::TempDir dir;
    write_config(dir / "c.json", R"({"task":"counting","size":40,"seed":4,"resolution":32,"output_dir":"ds"})");
    REQUIRE(run({"--root", dir.path().string(), "generate", "c.json"}) == kExitOk);
    const auto manifest = read_manifest(dir / "ds/manifest.jsonl");
    for (int i = 0; i < 10; ++i) {
        const auto& r = manifest[static_cast<std::size_t>(i * 4)];
        fs::create_directories(dir / "gen" / condition_key(r.labels));
        fs::copy_file(dir / "ds" / r.image, dir / "gen" / condition_key(r.labels) / (std::to_string(i) + ".png"));
    }
    REQUIRE(run({"--root", dir.path().string(), "memorization", "--generated", "gen", "--train-manifest",
                 "ds/manifest.jsonl", "--out", "rep"}) == kExitOk);
    const auto summary = csv(dir / "rep/memorization_summary.csv");
    CHECK(summary[1][0] == "10");
    CHECK(summary[1][2] == "1");
    const auto meta = read_run_metadata(dir / "rep")["memorization"];
    CHECK(meta["k"].get<double>() == doctest::Approx(0.333333).epsilon(1e-6));
    CHECK(meta["distance_space"] == "full-resolution 32x32 RGB");
    CHECK(csv(dir / "rep/memorization.csv").size() == 11);
    for (const auto& e : fs::directory_iterator(dir / "gen")) {
        CHECK(fs::exists(dir / "rep" / ("hist_" + e.path().filename().string() + ".csv")));
    }

    REQUIRE(run({"--root", dir.path().string(), "memorization", "--generated", "gen", "--train-manifest",
                 "ds/manifest.jsonl", "--downsample", "--out", "rep2"}) == kExitOk);
    CHECK(read_run_metadata(dir / "rep2")["memorization"]["distance_space"] == "full-resolution 32x32 RGB");
}

TEST_CASE("memorization reports missing images") {
    testing::TempDir dir;
    write_config(dir / "c.json", R"({"task":"counting","size":20,"seed":4,"resolution":32,"output_dir":"ds"})");
    REQUIRE(run({"--root", dir.path().string(), "generate", "c.json"}) == kExitOk);
    fs::remove(dir / "ds/counting/train/00000003.png");
    fs::create_directories(dir / "gen/count_1");
    fs::copy_file(dir / "ds/counting/train/00000000.png", dir / "gen/count_1/0.png");
    CHECK(run({"--root", dir.path().string(), "memorization", "--generated", "gen", "--train-manifest",
               "ds/manifest.jsonl"}) == kExitFailure);
    CHECK(run({"--root", dir.path().string(), "memorization", "--generated", "gen", "--train-manifest",
               "ds/manifest.jsonl", "--k", "1.5"}) == kExitUsage);
}

TEST_CASE("memorization 100 vs 2000 equals a brute-force oracle") {
    testing::TempDir dir;
    write_config(dir / "c.json", R"({"task":"counting","size":2000,"seed":9,"resolution":32,"output_dir":"ds"})");
    write_config(dir / "g.json", R"({"task":"counting","size":50,"seed":10,"resolution":32,"output_dir":"fresh"})");
    REQUIRE(run({"--root", dir.path().string(), "generate", "c.json"}) == kExitOk);
    REQUIRE(run({"--root", dir.path().string(), "generate", "g.json"}) == kExitOk);
    const auto train = read_manifest(dir / "ds/manifest.jsonl");
    const auto fresh = read_manifest(dir / "fresh/manifest.jsonl");
    std::vector<Image> train_imgs;
    for (const auto& r : train) train_imgs.push_back(read_png(dir / "ds" / r.image));

    std::map<std::string, Image> generated;
    for (int i = 0; i < 50; ++i) {
        // Near-copies of training images with a few perturbed pixels.
        Image img = train_imgs[static_cast<std::size_t>(i * 37)];
        for (int k = 0; k < i % 5; ++k) img.data[static_cast<std::size_t>(k * 101 + i)] ^= 0x3F;
        generated["count_" + std::to_string(*train[static_cast<std::size_t>(i * 37)].labels.count) + "/c" +
                  std::to_string(i)] = img;
    }
    for (int i = 0; i < 50; ++i) {
        generated["count_" + std::to_string(*fresh[static_cast<std::size_t>(i)].labels.count) + "/f" +
                  std::to_string(i)] = read_png(dir / "fresh" / fresh[static_cast<std::size_t>(i)].image);
    }
    for (const auto& [id, img] : generated) write_png(dir / "gen" / (id + ".png"), img);
    REQUIRE(run({"--root", dir.path().string(), "--threads", "2", "memorization", "--generated", "gen",
                 "--train-manifest", "ds/manifest.jsonl", "--out", "rep"}) == kExitOk);

    int memorized = 0;
    std::map<std::string, std::pair<double, bool>> oracle;
    for (const auto& [id, img] : generated) {
        std::uint64_t best = UINT64_MAX, second = UINT64_MAX;
        for (const auto& t : train_imgs) {
            std::uint64_t ss = 0;
            for (std::size_t k = 0; k < img.data.size(); ++k) {
                const int d = int(img.data[k]) - int(t.data[k]);
                ss += static_cast<std::uint64_t>(d * d);
            }
            if (ss < best) {
                second = best;
                best = ss;
            } else if (ss < second) {
                second = ss;
            }
        }
        const double ratio = second == 0 ? 0.0 : std::sqrt(double(best)) / std::sqrt(double(second));
        oracle[id] = {ratio, ratio < 1.0 / 3.0};
        memorized += ratio < 1.0 / 3.0;
    }
    const auto rows = csv(dir / "rep/memorization.csv");
    REQUIRE(rows.size() == 101);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& [ratio, mem] = oracle.at(rows[i][0]);
        CHECK(rows[i][3] == format_double(ratio));
        CHECK(rows[i][4] == (mem ? "1" : "0"));
    }
    const auto summary = csv(dir / "rep/memorization_summary.csv");
    CHECK(summary[1][1] == std::to_string(memorized));
    CHECK(summary[1][2] == format_double(memorized / 100.0));
    for (const auto& [id, o] : oracle) {
        // Unperturbed copies.
        if (id.find("/c") != std::string::npos && std::stoi(id.substr(id.find("/c") + 2)) % 5 == 0) CHECK(o.second);
    }
}

TEST_CASE("mine writes frequency tables") {
    testing::TempDir dir;
    const auto corpus = (kFixtures / "captions_40.txt").string();
    REQUIRE(run({"--root", dir.path().string(), "mine", "--input", corpus, "--sample-rate", "1", "--out", "freq.csv"}) ==
            kExitOk);
    MineOptions opts;
    CHECK(read_frequency_csv(dir / "freq.csv") == mine_file(corpus, opts).table.rows(MineMode::Count));
    REQUIRE(run({"--root", dir.path().string(), "mine", "--input", corpus, "--mode", "relation", "--sample-rate", "1",
                 "--relation-phrases", (fs::path(MOSAIC_DATA_DIR) / "relation_phrases.json").string(), "--out",
                 "rel.csv"}) == kExitOk);
    opts.mode = MineMode::Relation;
    CHECK(read_frequency_csv(dir / "rel.csv") == mine_file(corpus, opts).table.rows(MineMode::Relation));
    CHECK(read_run_metadata(dir.path())["mine"]["total_lines"] == 40);
    CHECK(run({"--root", dir.path().string(), "mine", "--input", corpus, "--sample-rate", "0"}) == kExitUsage);
    CHECK(run({"--root", dir.path().string(), "mine", "--input", "nope.txt"}) == kExitFailure);
}

TEST_CASE("mine verifies candidates through an endpoint") {
    httplib::Server server;
    std::string auth;
    server.Post("/chat", [&](const httplib::Request& req, httplib::Response& res) {
        auth = req.get_header_value("Authorization");
        res.set_content(R"({"choices":[{"message":{"role":"assistant","content":"{\"2\": 1}"}}]})", "application/json");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread t([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    testing::TempDir dir;
    ::setenv("MOSAIC_TEST_KEY", "k-123", 1);
    const int rc = run({"--root", dir.path().string(), "mine", "--input", (kFixtures / "captions_40.txt").string(),
                        "--sample-rate", "1", "--llm-endpoint", "http://127.0.0.1:" + std::to_string(port) + "/chat",
                        "--llm-model", "m", "--llm-key-env", "MOSAIC_TEST_KEY", "--out", "freq.csv"});
    server.stop();
    t.join();
    REQUIRE(rc == kExitOk);
    CHECK(auth == "Bearer k-123");
    const auto verified = read_frequency_csv(dir / "freq.verified.csv");
    CHECK(verified[1] == std::pair<std::string, std::int64_t>{"2", 13});
    CHECK(read_run_metadata(dir.path())["mine"]["llm"]["verified"] == 13);
    CHECK(run({"--root", dir.path().string(), "mine", "--input", (kFixtures / "captions_40.txt").string(),
               "--llm-endpoint", "http://x"}) == kExitUsage);
}

TEST_CASE("report over sizes and distributions") {
    testing::TempDir dir;
    std::vector<std::string> dirs;
    std::size_t expected_rows = 0;
    for (const std::string dist : {"uniform", "skewed"}) {
        for (std::int64_t size : {2000, 10000, 50000, 100000}) {
            const auto d = dir / (dist + std::to_string(size));
            write_report_dir(d, dist, size, size / 200000.0 + 0.3, 1.0 - size / 200000.0);
            dirs.push_back(d.string());
            expected_rows += csv(d / "accuracy.csv").size() - 1 + csv(d / "memorization_summary.csv").size() - 1;
        }
    }
    std::vector<std::string> args{"report"};
    args.insert(args.end(), dirs.begin(), dirs.end());
    args.insert(args.end(), {"--out", (dir / "out").string()});
    REQUIRE(run(args) == kExitOk);
    const auto svg = read_text_file(dir / "out/accuracy_vs_size.svg");
    CHECK(svg.rfind("<?xml", 0) == 0);
    CHECK(svg.find("</svg>") != std::string::npos);
    CHECK(count_of(svg, "<polyline") == 2);
    CHECK(count_of(svg, "<circle") == 8);
    CHECK(svg.find("log scale") != std::string::npos);
    CHECK(svg.find(">1e3<") != std::string::npos);
    CHECK(svg.find(">1e5<") != std::string::npos);
    CHECK(count_of(read_text_file(dir / "out/memorization_vs_size.svg"), "<polyline") == 2);
    CHECK(csv(dir / "out/merged.csv").size() - 1 == expected_rows);

    REQUIRE(run({"report", dirs[0], "--out", (dir / "single").string()}) == kExitOk);
    const auto single = read_text_file(dir / "single/accuracy_vs_size.svg");
    CHECK(count_of(single, "<polyline") == 1);
    CHECK(count_of(single, "<circle") == 1);
    CHECK(single.find("</svg>") != std::string::npos);
}

TEST_CASE("report rejects inconsistent heads") {
    testing::TempDir dir;
    write_report_dir(dir / "a", "uniform", 2000, 0.5, 0.5, {"count", "color"});
    write_report_dir(dir / "b", "uniform", 10000, 0.5, 0.5, {"count"});
    CHECK(run({"report", (dir / "a").string(), (dir / "b").string(), "--out", (dir / "out").string()}) == kExitFailure);
    CHECK_FALSE(fs::exists(dir / "out/merged.csv"));
    fs::create_directories(dir / "empty");
    CHECK(run({"report", (dir / "empty").string(), "--out", (dir / "out").string()}) == kExitFailure);
}
