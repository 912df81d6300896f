#include "mosaic/cli.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cstdlib>
#include <iostream>
#include <map>
#include <set>

#include "CLI11.hpp"
#include "mosaic/dataset_io.hpp"
#include "mosaic/metrics.hpp"
#include "mosaic/miner.hpp"
#include "mosaic/parallel.hpp"
#include "mosaic/render.hpp"
#include "mosaic/sampler.hpp"

namespace fs = std::filesystem;

namespace mosaic {

using nlohmann::json;

fs::path GlobalOptions::resolve(const fs::path& p) const {
    if (p.is_absolute() || root.empty()) return p;
    return root / p;
}

std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("sha256 failed");
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xF];
    }
    return out;
}

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

nlohmann::ordered_json read_run_metadata(const fs::path& dir) {
    const fs::path p = dir / "run.json";
    if (!fs::exists(p)) return nlohmann::ordered_json::object();
    auto j = nlohmann::ordered_json::parse(read_text_file(p), nullptr, false);
    if (j.is_discarded() || !j.is_object()) return nlohmann::ordered_json::object();
    return j;
}

void write_run_metadata(const fs::path& dir, const std::string& command, const nlohmann::ordered_json& entry) {
    auto j = read_run_metadata(dir);
    j[command] = entry;
    write_text_file(dir / "run.json", j.dump(2) + "\n");
}

namespace {

using Clock = std::chrono::steady_clock;

class Logger {
public:
    explicit Logger(bool quiet) : quiet_(quiet) {}
    template <typename... Args>
    void info(const Args&... args) const {
        if (quiet_) return;
        (std::cerr << ... << args) << '\n';
    }
    template <typename... Args>
    void error(const Args&... args) const {
        (std::cerr << "error: " << ... << args) << '\n';
    }

private:
    bool quiet_;
};

nlohmann::ordered_json base_metadata(const GlobalOptions& g, const nlohmann::ordered_json& behavior,
                                     std::optional<std::uint64_t> seed, Clock::time_point start,
                                     const std::vector<std::string>& warnings) {
    nlohmann::ordered_json m;
    m["toolkit_version"] = kToolkitVersion;
    m["config_hash"] = sha256_hex(behavior.dump());
    m["seed"] = seed ? nlohmann::ordered_json(*seed) : nlohmann::ordered_json(nullptr);
    m["wall_time_seconds"] = std::chrono::duration<double>(Clock::now() - start).count();
    m["workers"] = g.threads;
    m["warnings"] = warnings;
    return m;
}

// Dataset configuration recorded by `generate` next to a manifest, if any.
nlohmann::ordered_json dataset_config_near(const fs::path& manifest) {
    const auto meta = read_run_metadata(manifest.parent_path());
    if (meta.contains("generate") && meta["generate"].contains("config")) return meta["generate"]["config"];
    return nullptr;
}

std::string csv_join(const std::vector<std::string>& cells) {
    std::string line;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) line += ',';
        line += cells[i];
    }
    line += '\n';
    return line;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
    std::vector<std::vector<std::string>> rows;
    const std::string text = read_text_file(path);
    std::size_t start = 0;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string::npos) end = text.size();
        std::string_view line(text.data() + start, end - start);
        if (!line.empty()) {
            std::vector<std::string> cells;
            std::size_t s = 0;
            for (;;) {
                const auto c = line.find(',', s);
                cells.emplace_back(line.substr(s, c == std::string_view::npos ? std::string_view::npos : c - s));
                if (c == std::string_view::npos) break;
                s = c + 1;
            }
            rows.push_back(std::move(cells));
        }
        start = end + 1;
    }
    return rows;
}

}  // namespace

// ---------------------------------------------------------------------------
// generate

int cmd_generate(const GlobalOptions& g, const fs::path& config_path) {
    const Logger log(g.quiet);
    const auto start = Clock::now();
    json raw;
    try {
        raw = json::parse(read_text_file(g.resolve(config_path)));
    } catch (const std::exception& e) {
        log.error("cannot read config ", config_path.string(), ": ", e.what());
        return kExitUsage;
    }
    if (g.seed_override && raw.is_object()) raw["seed"] = *g.seed_override;
    const ConfigValidation validation = validate_config(raw);
    if (!validation.ok()) {
        for (const auto& v : validation.violations) log.error(v);
        return kExitUsage;
    }
    const DatasetConfig config = *validation.config;

    DatasetPlan plan;
    try {
        plan = plan_dataset(config);
    } catch (const ConfigError& e) {
        log.error(e.what());
        return kExitUsage;
    }

    const fs::path out = g.resolve(config.output_dir);
    const std::string split = "train";
    try {
        fs::create_directories(out / std::string(task_name(config.task)) / split);
        RenderSettings settings;
        settings.resolution = config.resolution;
        settings.supersampling = config.supersampling;

        std::vector<ManifestRecord> records(plan.labels.size());
        build_dataset(config, plan, g.threads, [&](std::size_t i, const SceneSpec& scene) {
            const std::string id = sample_id(i);
            std::string rel = image_path(config.task, split, id);
            write_png(out / rel, render_scene(scene, settings));
            records[i] = make_record(scene, id, std::move(rel));
        });
        write_manifest(out / "manifest.jsonl", std::move(records));

        if (plan.holdout) {
            std::vector<ManifestRecord> unseen;
            for (std::size_t i = 0; i < plan.unseen_conditions.size(); ++i) {
                ManifestRecord r;
                r.id = "unseen-" + sample_id(i);
                r.task = config.task;
                r.variant = config.variant;
                r.labels = plan.unseen_conditions[i];
                r.seen = false;
                r.seed = config.seed;
                unseen.push_back(std::move(r));
            }
            write_manifest(out / "unseen.jsonl", std::move(unseen));
        }

        const auto cfg = config_to_json(config);
        auto meta = base_metadata(g, cfg, config.seed, start, {});
        meta["config"] = cfg;
        meta["samples"] = plan.labels.size();
        meta["unseen_conditions"] = plan.unseen_conditions.size();
        if (plan.holdout) meta["per_cell"] = plan.holdout->per_cell;
        write_run_metadata(out, "generate", meta);
        log.info("generated ", plan.labels.size(), " samples into ", out.string());
    } catch (const GenerationError& e) {
        log.error("generation failed: ", e.what());
        return kExitFailure;
    } catch (const std::exception& e) {
        log.error(e.what());
        return kExitFailure;
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// evaluate

int cmd_evaluate(const GlobalOptions& g, const EvaluateOptions& o) {
    const Logger log(g.quiet);
    const auto start = Clock::now();
    const fs::path manifest_path = g.resolve(o.manifest);
    const fs::path out = g.resolve(o.out);

    std::vector<ManifestRecord> manifest;
    std::vector<ManifestRecord> unseen_records;
    PredictionSet predictions;
    try {
        manifest = read_manifest(manifest_path);
        fs::path unseen_path = o.unseen ? g.resolve(*o.unseen) : manifest_path.parent_path() / "unseen.jsonl";
        if (o.unseen || fs::exists(unseen_path)) unseen_records = read_manifest(unseen_path);
        predictions = read_predictions(g.resolve(o.predictions));
    } catch (const std::exception& e) {
        log.error(e.what());
        return kExitFailure;
    }
    for (const auto& w : predictions.warnings) log.info("warning: ", w);

    std::set<std::string> seen_keys;
    std::set<std::string> unseen_keys;
    std::optional<std::pair<Task, Variant>> kind;
    for (const auto* list : {&manifest, &unseen_records}) {
        for (const auto& r : *list) {
            (r.seen ? seen_keys : unseen_keys).insert(condition_key(r.labels));
            if (!kind) kind = {r.task, r.variant};
        }
    }
    if (!kind) {
        log.error("manifest lists no conditions");
        return kExitFailure;
    }

    std::vector<Head> heads;
    try {
        if (o.heads.empty()) heads = default_heads(kind->first, kind->second);
        for (const auto& h : o.heads) heads.push_back(head_from_name(h));
    } catch (const ValidationError& e) {
        log.error(e.what());
        return kExitUsage;
    }

    std::vector<PredictionRecord> seen;
    std::vector<PredictionRecord> unseen;
    std::vector<std::string> failures;
    for (const auto& r : predictions.records) {
        const std::string key = condition_key(r.true_labels);
        bool ok = true;
        for (Head h : heads) {
            if (!r.predicted.count(h) || !true_class(r.true_labels, h)) {
                failures.push_back(r.id + ": missing head '" + std::string(head_name(h)) + "'");
                ok = false;
            }
        }
        if (!ok) continue;
        if (seen_keys.count(key)) seen.push_back(r);
        else if (unseen_keys.count(key)) unseen.push_back(r);
        else failures.push_back(r.id + ": condition '" + key + "' is not part of the dataset");
    }
    if (!failures.empty()) {
        for (const auto& f : failures) log.error("join failure: ", f);
        return kExitFailure;
    }

    std::vector<PredictionRecord> all = seen;
    all.insert(all.end(), unseen.begin(), unseen.end());
    const std::vector<std::pair<std::string, const std::vector<PredictionRecord>*>> splits{
        {"all", &all}, {"seen", &seen}, {"unseen", &unseen}};

    std::string acc_csv = "split,head,n,correct,accuracy\n";
    std::string class_csv = "split,head,class,n,correct,accuracy\n";
    std::string conf_csv = "split,head,true,predicted,count\n";
    std::string joint_csv = "split,heads,n,correct,accuracy\n";
    std::string head_list;
    for (Head h : heads) head_list += (head_list.empty() ? "" : "+") + std::string(head_name(h));

    for (const auto& [name, recs] : splits) {
        if (recs->empty()) continue;
        for (Head h : heads) {
            const AccuracyReport rep = accuracy(*recs, h);
            acc_csv += csv_join({name, std::string(head_name(h)), std::to_string(rep.n), std::to_string(rep.correct),
                                 format_double(rep.overall)});
            for (const auto& [cls, n] : rep.per_class_n) {
                class_csv += csv_join({name, std::string(head_name(h)), std::to_string(cls), std::to_string(n),
                                       std::to_string(rep.per_class_correct.at(cls)),
                                       format_double(rep.per_class.at(cls))});
            }
            for (std::size_t t = 0; t < rep.confusion.size(); ++t) {
                for (std::size_t p = 0; p < rep.confusion[t].size(); ++p) {
                    if (rep.confusion[t][p] == 0) continue;
                    conf_csv += csv_join({name, std::string(head_name(h)), std::to_string(rep.range.lo + static_cast<int>(t)),
                                          std::to_string(rep.range.lo + static_cast<int>(p)),
                                          std::to_string(rep.confusion[t][p])});
                }
            }
            for (const auto& [cls, n] : rep.unpredicted) {
                conf_csv += csv_join({name, std::string(head_name(h)), std::to_string(cls), "none", std::to_string(n)});
            }
        }
        if (heads.size() >= 2) {
            const double joint = joint_accuracy(*recs, heads);
            const auto correct = static_cast<std::int64_t>(std::llround(joint * static_cast<double>(recs->size())));
            joint_csv += csv_join({name, head_list, std::to_string(recs->size()), std::to_string(correct),
                                   format_double(joint)});
        }
    }

    try {
        write_text_file(out / "accuracy.csv", acc_csv);
        write_text_file(out / "per_class.csv", class_csv);
        write_text_file(out / "confusion.csv", conf_csv);
        if (heads.size() >= 2) write_text_file(out / "joint.csv", joint_csv);
        else if (fs::exists(out / "joint.csv")) fs::remove(out / "joint.csv");

        nlohmann::ordered_json behavior;
        behavior["manifest"] = fs::absolute(manifest_path).lexically_normal().string();
        behavior["predictions"] = fs::absolute(g.resolve(o.predictions)).lexically_normal().string();
        behavior["heads"] = head_list;
        auto meta = base_metadata(g, behavior, std::nullopt, start, predictions.warnings);
        meta["heads"] = head_list;
        meta["predictions"] = predictions.records.size();
        meta["seen"] = seen.size();
        meta["unseen"] = unseen.size();
        meta["dataset"] = dataset_config_near(manifest_path);
        write_run_metadata(out, "evaluate", meta);
    } catch (const std::exception& e) {
        log.error(e.what());
        return kExitFailure;
    }
    log.info("evaluated ", all.size(), " predictions into ", out.string());
    return kExitOk;
}

// ---------------------------------------------------------------------------
// memorization

int cmd_memorization(const GlobalOptions& g, const MemorizationOptions& o) {
    const Logger log(g.quiet);
    const auto start = Clock::now();
    const fs::path manifest_path = g.resolve(o.train_manifest);
    const fs::path generated_dir = g.resolve(o.generated);
    const fs::path out = g.resolve(o.out);
    if (!(o.k > 0.0 && o.k < 1.0)) {
        log.error("k must lie in (0, 1)");
        return kExitUsage;
    }
    if (o.bins < 1) {
        log.error("bins must be positive");
        return kExitUsage;
    }

    try {
        const auto manifest = read_manifest(manifest_path);
        std::vector<fs::path> train_paths;
        std::vector<std::string> missing;
        for (const auto& r : manifest) {
            if (!r.seen || r.image.empty()) continue;
            fs::path p = manifest_path.parent_path() / r.image;
            if (!fs::exists(p)) missing.push_back(p.string());
            train_paths.push_back(std::move(p));
        }
        std::vector<fs::path> gen_paths;
        if (fs::is_directory(generated_dir)) {
            for (const auto& e : fs::recursive_directory_iterator(generated_dir)) {
                if (e.is_regular_file() && e.path().extension() == ".png") gen_paths.push_back(e.path());
            }
        } else {
            missing.push_back(generated_dir.string());
        }
        if (!missing.empty()) {
            for (const auto& m : missing) log.error("missing image: ", m);
            return kExitFailure;
        }
        std::sort(gen_paths.begin(), gen_paths.end(),
                  [&](const fs::path& a, const fs::path& b) {
                      return a.lexically_relative(generated_dir).generic_string() <
                             b.lexically_relative(generated_dir).generic_string();
                  });
        if (gen_paths.empty()) {
            log.error("no generated PNG images under ", generated_dir.string());
            return kExitFailure;
        }
        if (train_paths.size() < 2) {
            log.error("need at least two training images");
            return kExitFailure;
        }

        std::atomic<bool> reduced{false};
        auto load = [&](const std::vector<fs::path>& paths) {
            std::vector<Image> imgs(paths.size());
            parallel_for(paths.size(), g.threads, [&](std::size_t i) {
                Image img = read_png(paths[i]);
                if (o.downsample && img.width > 64) {
                    img = downsample(img, 64);
                    reduced = true;
                }
                imgs[i] = std::move(img);
            });
            return imgs;
        };
        const auto train_imgs = load(train_paths);
        const auto gen_imgs = load(gen_paths);
        const int w = train_imgs.front().width;
        const int h = train_imgs.front().height;
        std::vector<std::string> mismatched;
        for (std::size_t i = 0; i < train_imgs.size(); ++i) {
            if (train_imgs[i].width != w || train_imgs[i].height != h) mismatched.push_back(train_paths[i].string());
        }
        for (std::size_t i = 0; i < gen_imgs.size(); ++i) {
            if (gen_imgs[i].width != w || gen_imgs[i].height != h) mismatched.push_back(gen_paths[i].string());
        }
        if (!mismatched.empty()) {
            for (const auto& m : mismatched) log.error("image size differs from ", w, "x", h, ": ", m);
            return kExitFailure;
        }

        ImageSet train(static_cast<std::size_t>(w) * h * 3);
        for (const auto& img : train_imgs) train.add(img.data);
        ImageSet gen(static_cast<std::size_t>(w) * h * 3);
        for (const auto& img : gen_imgs) gen.add(img.data);

        const auto results = nn_search(gen, train, g.threads);
        const auto mem = memorization_rate(results, {o.k});

        std::vector<std::string> ids;
        std::vector<std::optional<std::string>> labels;
        std::vector<std::string> unlabeled;
        for (const auto& p : gen_paths) {
            const fs::path rel = p.lexically_relative(generated_dir);
            ids.push_back((rel.parent_path() / rel.stem()).generic_string());
            if (rel.has_parent_path()) {
                labels.push_back(rel.parent_path().generic_string());
            } else {
                labels.push_back(std::nullopt);
                unlabeled.push_back(rel.generic_string());
            }
        }
        if (!unlabeled.empty()) {
            for (const auto& u : unlabeled) log.error("generated image outside a condition directory: ", u);
            return kExitFailure;
        }
        const auto hist = distance_histograms(results, labels, o.bins);

        std::string mem_csv = "id,d1,d2,ratio,memorized\n";
        for (std::size_t i = 0; i < results.size(); ++i) {
            mem_csv += csv_join({ids[i], format_double(results[i].d1), format_double(results[i].d2),
                                 format_double(results[i].ratio), mem.memorized[i] ? "1" : "0"});
        }
        write_text_file(out / "memorization.csv", mem_csv);
        for (const auto& [label, counts] : hist.per_label) {
            std::string csv = "bin_lo,bin_hi,count\n";
            for (int b = 0; b < hist.bins; ++b) {
                csv += csv_join({format_double(hist.bin_lower(b)), format_double(hist.bin_lower(b + 1)),
                                 std::to_string(counts[static_cast<std::size_t>(b)])});
            }
            std::string safe = label;
            std::replace(safe.begin(), safe.end(), '/', '_');
            write_text_file(out / ("hist_" + safe + ".csv"), csv);
        }
        const std::string space = std::string(reduced ? "downsampled " : "full-resolution ") +
                                  std::to_string(w) + "x" + std::to_string(h) + " RGB";
        write_text_file(out / "memorization_summary.csv",
                        "n,memorized,rate,k,mean_d1,distance_space\n" +
                            csv_join({std::to_string(results.size()), std::to_string(mem.memorized_count),
                                      format_double(mem.rate), format_double(o.k), format_double(hist.mean_d1),
                                      space}));

        nlohmann::ordered_json behavior;
        behavior["generated"] = fs::absolute(generated_dir).lexically_normal().string();
        behavior["train_manifest"] = fs::absolute(manifest_path).lexically_normal().string();
        behavior["k"] = o.k;
        behavior["downsample"] = o.downsample;
        behavior["bins"] = o.bins;
        auto meta = base_metadata(g, behavior, std::nullopt, start, {});
        meta["k"] = o.k;
        meta["distance_space"] = space;
        meta["generated_images"] = results.size();
        meta["training_images"] = train.size();
        meta["rate"] = mem.rate;
        meta["dataset"] = dataset_config_near(manifest_path);
        write_run_metadata(out, "memorization", meta);
        log.info("memorization rate ", mem.rate, " over ", results.size(), " samples");
    } catch (const std::exception& e) {
        log.error(e.what());
        return kExitFailure;
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// mine

int cmd_mine(const GlobalOptions& g, const MineCommandOptions& o) {
    const Logger log(g.quiet);
    const auto start = Clock::now();
    MineOptions opts;
    try {
        opts.mode = mine_mode_from_name(o.mode);
        if (o.relation_phrases) opts.phrases = RelationPhrases::load(g.resolve(*o.relation_phrases));
    } catch (const std::exception& e) {
        log.error(e.what());
        return kExitUsage;
    }
    if (!(o.sample_rate > 0.0 && o.sample_rate <= 1.0)) {
        log.error("sample rate must lie in (0, 1]");
        return kExitUsage;
    }
    if (o.llm_endpoint.has_value() != o.llm_model.has_value()) {
        log.error("--llm-endpoint and --llm-model go together");
        return kExitUsage;
    }
    opts.sample_rate = o.sample_rate;
    opts.seed = o.seed;
    opts.workers = g.threads;

    const fs::path out = g.resolve(o.out);
    try {
        const MineResult result = mine_file(g.resolve(o.input), opts);
        write_frequency_csv(out, result.table.rows(opts.mode));
        std::vector<std::string> warnings;
        if (result.table.skipped_lines > 0) {
            warnings.push_back(std::to_string(result.table.skipped_lines) + " unreadable lines skipped");
            log.info("warning: ", warnings.back());
        }

        nlohmann::ordered_json behavior;
        behavior["input"] = fs::absolute(g.resolve(o.input)).lexically_normal().string();
        behavior["mode"] = o.mode;
        behavior["sample_rate"] = o.sample_rate;
        behavior["seed"] = o.seed;
        behavior["relation_phrases"] = o.relation_phrases ? o.relation_phrases->string() : "";
        behavior["llm_endpoint"] = o.llm_endpoint.value_or("");
        behavior["llm_model"] = o.llm_model.value_or("");

        nlohmann::ordered_json verified_meta = nullptr;
        if (o.llm_endpoint) {
            LlmEndpoint ep;
            ep.url = *o.llm_endpoint;
            ep.model = *o.llm_model;
            if (o.llm_key_env) {
                if (const char* key = std::getenv(o.llm_key_env->c_str())) ep.api_key = key;
                else warnings.push_back("environment variable " + *o.llm_key_env + " is not set");
            }
            const auto verifications = llm_verify(result.candidates, opts.mode, ep);
            const auto summary = summarize_verifications(verifications, opts.mode);
            std::vector<std::pair<std::string, std::int64_t>> rows;
            FrequencyTable vt = empty_table(opts.mode);
            vt.counts = summary.counts;
            fs::path vpath = out;
            vpath.replace_extension(".verified.csv");
            write_frequency_csv(vpath, vt.rows(opts.mode));
            verified_meta = {{"verified", summary.verified}, {"unverified", summary.unverified},
                             {"file", vpath.filename().string()}};
            log.info("LLM verified ", summary.verified, ", unverified ", summary.unverified);
        }

        auto meta = base_metadata(g, behavior, o.seed, start, warnings);
        meta["total_lines"] = result.table.total_lines;
        meta["sampled_lines"] = result.table.sampled_lines;
        meta["matched_lines"] = result.table.matched_lines;
        meta["skipped_lines"] = result.table.skipped_lines;
        meta["llm"] = verified_meta;
        write_run_metadata(out.has_parent_path() ? out.parent_path() : fs::path("."), "mine", meta);
        log.info("mined ", result.table.total_lines, " lines (", result.table.sampled_lines, " sampled) into ",
                 out.string());
    } catch (const std::exception& e) {
        log.error(e.what());
        return kExitFailure;
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// report

namespace {

struct SeriesPoint {
    double size;
    double value;
};

struct ChartSeries {
    std::string name;
    std::vector<SeriesPoint> points;
};

std::string svg_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string render_line_chart(const std::string& title, const std::string& y_label,
                              const std::vector<ChartSeries>& series) {
    constexpr double kWidth = 720, kHeight = 440, kLeft = 70, kRight = 200, kTop = 40, kBottom = 60;
    const double plot_w = kWidth - kLeft - kRight;
    const double plot_h = kHeight - kTop - kBottom;
    double lo = 1e300, hi = -1e300;
    for (const auto& s : series) {
        for (const auto& p : s.points) {
            lo = std::min(lo, std::log10(p.size));
            hi = std::max(hi, std::log10(p.size));
        }
    }
    if (lo > hi) lo = 0, hi = 1;
    lo = std::floor(lo);
    hi = std::max(lo + 1.0, std::ceil(hi));
    auto px = [&](double size) { return kLeft + (std::log10(size) - lo) / (hi - lo) * plot_w; };
    auto py = [&](double v) { return kTop + (1.0 - std::clamp(v, 0.0, 1.0)) * plot_h; };

    static constexpr std::array<std::string_view, 8> kColors{"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                                             "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};
    std::string s;
    s += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + svg_num(kWidth) + "\" height=\"" +
         svg_num(kHeight) + "\" viewBox=\"0 0 " + svg_num(kWidth) + " " + svg_num(kHeight) + "\">\n";
    s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s += "<text x=\"" + svg_num(kLeft) + "\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\">" + title +
         "</text>\n";
    s += "<g stroke=\"black\" stroke-width=\"1\">\n";
    s += "<line x1=\"" + svg_num(kLeft) + "\" y1=\"" + svg_num(kTop + plot_h) + "\" x2=\"" + svg_num(kLeft + plot_w) +
         "\" y2=\"" + svg_num(kTop + plot_h) + "\"/>\n";
    s += "<line x1=\"" + svg_num(kLeft) + "\" y1=\"" + svg_num(kTop) + "\" x2=\"" + svg_num(kLeft) + "\" y2=\"" +
         svg_num(kTop + plot_h) + "\"/>\n";
    s += "</g>\n<g font-family=\"sans-serif\" font-size=\"11\">\n";
    for (int e = static_cast<int>(lo); e <= static_cast<int>(hi); ++e) {
        const double x = px(std::pow(10.0, e));
        s += "<line x1=\"" + svg_num(x) + "\" y1=\"" + svg_num(kTop + plot_h) + "\" x2=\"" + svg_num(x) + "\" y2=\"" +
             svg_num(kTop + plot_h + 5) + "\" stroke=\"black\"/>\n";
        s += "<text x=\"" + svg_num(x) + "\" y=\"" + svg_num(kTop + plot_h + 18) +
             "\" text-anchor=\"middle\">1e" + std::to_string(e) + "</text>\n";
    }
    for (int t = 0; t <= 4; ++t) {
        const double v = t / 4.0;
        s += "<text x=\"" + svg_num(kLeft - 8) + "\" y=\"" + svg_num(py(v) + 4) + "\" text-anchor=\"end\">" +
             svg_num(v) + "</text>\n";
    }
    s += "<text x=\"" + svg_num(kLeft + plot_w / 2) + "\" y=\"" + svg_num(kHeight - 15) +
         "\" text-anchor=\"middle\">dataset size (log scale)</text>\n";
    s += "<text x=\"18\" y=\"" + svg_num(kTop + plot_h / 2) + "\" transform=\"rotate(-90 18 " +
         svg_num(kTop + plot_h / 2) + ")\" text-anchor=\"middle\">" + y_label + "</text>\n";
    s += "</g>\n";
    for (std::size_t i = 0; i < series.size(); ++i) {
        const auto color = std::string(kColors[i % kColors.size()]);
        std::string pts;
        for (const auto& p : series[i].points) {
            if (!pts.empty()) pts += ' ';
            pts += svg_num(px(p.size)) + "," + svg_num(py(p.value));
        }
        s += "<g class=\"series\" data-name=\"" + series[i].name + "\">\n";
        s += "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"2\" points=\"" + pts + "\"/>\n";
        for (const auto& p : series[i].points) {
            s += "<circle cx=\"" + svg_num(px(p.size)) + "\" cy=\"" + svg_num(py(p.value)) + "\" r=\"3\" fill=\"" +
                 color + "\"/>\n";
        }
        const double ly = kTop + 14.0 * static_cast<double>(i);
        s += "<rect x=\"" + svg_num(kLeft + plot_w + 15) + "\" y=\"" + svg_num(ly) + "\" width=\"10\" height=\"10\" fill=\"" +
             color + "\"/>\n";
        s += "<text x=\"" + svg_num(kLeft + plot_w + 30) + "\" y=\"" + svg_num(ly + 9) +
             "\" font-family=\"sans-serif\" font-size=\"11\">" + series[i].name + "</text>\n";
        s += "</g>\n";
    }
    s += "</svg>\n";
    return s;
}

struct DirReport {
    fs::path dir;
    std::string task, variant, distribution;
    std::int64_t size = 0;
    std::vector<std::vector<std::string>> accuracy_rows;  // without header
    std::optional<std::vector<std::string>> memorization;  // summary row
    std::set<std::string> heads;
};

}  // namespace

int cmd_report(const GlobalOptions& g, const std::vector<fs::path>& dirs, const fs::path& out_arg) {
    const Logger log(g.quiet);
    const auto start = Clock::now();
    if (dirs.empty()) {
        log.error("report needs at least one report directory");
        return kExitUsage;
    }
    std::vector<DirReport> reports;
    std::vector<std::string> problems;
    for (const auto& d : dirs) {
        DirReport r;
        r.dir = g.resolve(d);
        const auto meta = read_run_metadata(r.dir);
        nlohmann::ordered_json dataset;
        for (const char* cmd : {"evaluate", "memorization"}) {
            if (meta.contains(cmd) && meta[cmd].contains("dataset") && meta[cmd]["dataset"].is_object()) {
                dataset = meta[cmd]["dataset"];
                break;
            }
        }
        if (!dataset.is_object()) {
            problems.push_back(r.dir.string() + ": run.json carries no dataset configuration");
            continue;
        }
        r.task = dataset.value("task", "");
        r.variant = dataset.value("variant", "");
        r.distribution = dataset.value("distribution", "");
        r.size = dataset.value("size", std::int64_t{0});
        try {
            if (fs::exists(r.dir / "accuracy.csv")) {
                auto rows = read_csv(r.dir / "accuracy.csv");
                if (!rows.empty()) rows.erase(rows.begin());
                for (const auto& row : rows) {
                    if (row.size() != 5) throw ParseError("malformed accuracy.csv row");
                    r.heads.insert(row[1]);
                }
                r.accuracy_rows = std::move(rows);
            }
            if (fs::exists(r.dir / "memorization_summary.csv")) {
                auto rows = read_csv(r.dir / "memorization_summary.csv");
                if (rows.size() != 2 || rows[1].size() != 6) throw ParseError("malformed memorization_summary.csv");
                r.memorization = rows[1];
            }
        } catch (const std::exception& e) {
            problems.push_back(r.dir.string() + ": " + e.what());
            continue;
        }
        if (r.accuracy_rows.empty() && !r.memorization) {
            problems.push_back(r.dir.string() + ": no accuracy.csv or memorization_summary.csv");
            continue;
        }
        reports.push_back(std::move(r));
    }
    if (!problems.empty()) {
        for (const auto& p : problems) log.error(p);
        return kExitFailure;
    }

    std::optional<std::set<std::string>> heads;
    for (const auto& r : reports) {
        if (r.accuracy_rows.empty()) continue;
        if (!heads) heads = r.heads;
    }
    std::vector<std::string> offenders;
    for (const auto& r : reports) {
        if (!r.accuracy_rows.empty() && heads && r.heads != *heads) offenders.push_back(r.dir.string());
    }
    if (!offenders.empty()) {
        std::string expected;
        for (const auto& h : *heads) expected += (expected.empty() ? "" : "+") + h;
        log.error("inconsistent heads across report directories (expected ", expected, "):");
        for (const auto& o : offenders) log.error("  ", o);
        return kExitFailure;
    }

    std::string merged = "dir,task,variant,distribution,size,metric,split,head,n,value\n";
    std::map<std::string, ChartSeries> acc_series;
    std::map<std::string, ChartSeries> mem_series;
    const bool multi_head = heads && heads->size() > 1;
    for (const auto& r : reports) {
        const std::string prefix = r.dir.generic_string();
        for (const auto& row : r.accuracy_rows) {
            merged += csv_join({prefix, r.task, r.variant, r.distribution, std::to_string(r.size), "accuracy", row[0],
                                row[1], row[2], row[4]});
            if (row[0] != "all") continue;
            std::string key = r.distribution + "/" + r.variant;
            if (multi_head) key += "/" + row[1];
            acc_series[key].name = key;
            acc_series[key].points.push_back({static_cast<double>(r.size), std::stod(row[4])});
        }
        if (r.memorization) {
            const auto& m = *r.memorization;
            merged += csv_join({prefix, r.task, r.variant, r.distribution, std::to_string(r.size),
                                "memorization_rate", "all", "", m[0], m[2]});
            const std::string key = r.distribution + "/" + r.variant;
            mem_series[key].name = key;
            mem_series[key].points.push_back({static_cast<double>(r.size), std::stod(m[2])});
        }
    }
    auto finish = [](std::map<std::string, ChartSeries>& m) {
        std::vector<ChartSeries> v;
        for (auto& [k, s] : m) {
            std::stable_sort(s.points.begin(), s.points.end(),
                             [](const SeriesPoint& a, const SeriesPoint& b) { return a.size < b.size; });
            v.push_back(std::move(s));
        }
        return v;
    };

    const fs::path out = g.resolve(out_arg);
    try {
        write_text_file(out / "merged.csv", merged);
        write_text_file(out / "accuracy_vs_size.svg",
                        render_line_chart("Accuracy vs. dataset size", "accuracy", finish(acc_series)));
        write_text_file(out / "memorization_vs_size.svg",
                        render_line_chart("Memorization rate vs. dataset size", "memorization rate", finish(mem_series)));
        nlohmann::ordered_json behavior;
        behavior["dirs"] = nlohmann::ordered_json::array();
        for (const auto& d : dirs) behavior["dirs"].push_back(d.generic_string());
        auto meta = base_metadata(g, behavior, std::nullopt, start, {});
        meta["report_dirs"] = reports.size();
        write_run_metadata(out, "report", meta);
    } catch (const std::exception& e) {
        log.error(e.what());
        return kExitFailure;
    }
    log.info("report written to ", out.string());
    return kExitOk;
}

// ---------------------------------------------------------------------------
// argument parsing

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"Diagnostic multi-object dataset generator and evaluator"};
    app.set_version_flag("--version", std::string(kToolkitVersion));
    GlobalOptions g;
    g.threads = std::max(1u, std::thread::hardware_concurrency());
    std::uint64_t seed_override = 0;
    std::string root;
    app.add_option("--threads", g.threads, "Worker threads")->check(CLI::PositiveNumber);
    auto* seed_opt = app.add_option("--seed-override", seed_override, "Replace the configured seed");
    app.add_flag("--quiet", g.quiet, "Suppress progress output");
    app.add_option("--root", root, "Base directory for relative paths");
    app.require_subcommand(1);

    std::string config_path;
    auto* gen = app.add_subcommand("generate", "Render a dataset from a config file");
    gen->add_option("config,--config", config_path, "Dataset config JSON")->required();

    EvaluateOptions eval;
    std::string unseen_path;
    auto* ev = app.add_subcommand("evaluate", "Score classifier predictions against a dataset");
    ev->add_option("--manifest", eval.manifest, "Dataset manifest.jsonl")->required();
    ev->add_option("--predictions", eval.predictions, "predictions.jsonl")->required();
    ev->add_option("--unseen", unseen_path, "Held-out condition list");
    ev->add_option("--heads", eval.heads, "Heads to score (count,relation,attribution,color)")->delimiter(',');
    ev->add_option("--out", eval.out, "Report directory");

    MemorizationOptions mem;
    auto* me = app.add_subcommand("memorization", "Nearest-neighbor memorization analysis");
    me->add_option("--generated", mem.generated, "Directory of generated <condition>/<k>.png images")->required();
    me->add_option("--train-manifest", mem.train_manifest, "Training manifest.jsonl")->required();
    me->add_option("--k", mem.k, "Memorization threshold on d1/d2");
    me->add_flag("--downsample", mem.downsample, "Area-average images to 64x64 before measuring");
    me->add_option("--bins", mem.bins, "Histogram bins");
    me->add_option("--out", mem.out, "Report directory");

    MineCommandOptions mine;
    std::string phrases, endpoint, model, key_env;
    auto* mi = app.add_subcommand("mine", "Count or relation phrase frequencies in a caption corpus");
    mi->add_option("--input", mine.input, "Caption file, one per line (plain or gzip)")->required();
    mi->add_option("--mode", mine.mode, "count | relation")->check(CLI::IsMember({"count", "relation"}));
    mi->add_option("--sample-rate", mine.sample_rate, "Bernoulli sampling rate");
    mi->add_option("--seed", mine.seed, "Sampling seed");
    mi->add_option("--relation-phrases", phrases, "JSON file overriding relation phrase groups");
    mi->add_option("--llm-endpoint", endpoint, "Chat-completion URL for verification");
    mi->add_option("--llm-model", model, "Model name for verification");
    mi->add_option("--llm-key-env", key_env, "Environment variable holding the API key");
    mi->add_option("--out", mine.out, "Output CSV");

    std::vector<std::string> report_dirs;
    fs::path report_out = "report";
    auto* re = app.add_subcommand("report", "Merge report directories into charts");
    re->add_option("dirs,--dirs", report_dirs, "Report directories")->required();
    re->add_option("--out", report_out, "Output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }
    if (*seed_opt) g.seed_override = seed_override;
    g.root = root;

    try {
        if (*gen) return cmd_generate(g, config_path);
        if (*ev) {
            if (!unseen_path.empty()) eval.unseen = unseen_path;
            return cmd_evaluate(g, eval);
        }
        if (*me) return cmd_memorization(g, mem);
        if (*mi) {
            if (!phrases.empty()) mine.relation_phrases = phrases;
            if (!endpoint.empty()) mine.llm_endpoint = endpoint;
            if (!model.empty()) mine.llm_model = model;
            if (!key_env.empty()) mine.llm_key_env = key_env;
            return cmd_mine(g, mine);
        }
        if (*re) {
            std::vector<fs::path> dirs(report_dirs.begin(), report_dirs.end());
            return cmd_report(g, dirs, report_out);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitUsage;
}

}  // namespace mosaic
