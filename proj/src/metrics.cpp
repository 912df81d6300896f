#include "mosaic/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mosaic/parallel.hpp"

namespace mosaic {

namespace {

std::optional<int> predicted_class(const PredictionRecord& r, Head head) {
    auto it = r.predicted.find(head);
    if (it == r.predicted.end()) {
        throw ValidationError("record '" + r.id + "' has no prediction for head '" +
                              std::string(head_name(head)) + "'");
    }
    return it->second;
}

int truth_of(const PredictionRecord& r, Head head) {
    const auto t = true_class(r.true_labels, head);
    if (!t) {
        throw ValidationError("record '" + r.id + "' has no ground truth for head '" +
                              std::string(head_name(head)) + "'");
    }
    const HeadRange range = head_range(head);
    if (*t < range.lo || *t > range.hi) {
        throw ValidationError("record '" + r.id + "' true class out of range");
    }
    return *t;
}

}  // namespace

AccuracyReport accuracy(std::span<const PredictionRecord> records, Head head) {
    if (records.empty()) throw UndefinedMetricError("accuracy is undefined for an empty prediction set");
    AccuracyReport rep;
    rep.head = head;
    rep.range = head_range(head);
    const auto k = static_cast<std::size_t>(rep.range.size());
    rep.confusion.assign(k, std::vector<std::int64_t>(k, 0));

    for (const auto& r : records) {
        const int t = truth_of(r, head);
        const auto p = predicted_class(r, head);
        ++rep.n;
        ++rep.per_class_n[t];
        rep.per_class_correct[t] += 0;
        if (!p) {
            ++rep.unpredicted[t];
            continue;
        }
        ++rep.confusion[static_cast<std::size_t>(t - rep.range.lo)][static_cast<std::size_t>(*p - rep.range.lo)];
        if (*p == t) {
            ++rep.correct;
            ++rep.per_class_correct[t];
        }
    }
    rep.overall = static_cast<double>(rep.correct) / static_cast<double>(rep.n);
    for (const auto& [cls, n] : rep.per_class_n) {
        rep.per_class[cls] = static_cast<double>(rep.per_class_correct[cls]) / static_cast<double>(n);
    }
    return rep;
}

double joint_accuracy(std::span<const PredictionRecord> records, std::span<const Head> heads) {
    if (heads.empty()) throw ValidationError("joint accuracy needs at least one head");
    if (records.empty()) throw UndefinedMetricError("joint accuracy is undefined for an empty prediction set");
    std::int64_t correct = 0;
    for (const auto& r : records) {
        bool all = true;
        for (Head h : heads) {
            const int t = truth_of(r, h);
            const auto p = predicted_class(r, h);
            all = all && p && *p == t;
        }
        if (all) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(records.size());
}

void ImageSet::add(std::span<const std::uint8_t> pixels) {
    if (dim_ == 0) dim_ = pixels.size();
    if (pixels.size() != dim_ || dim_ == 0) {
        throw ArgumentError("image of " + std::to_string(pixels.size()) + " values does not match dimension " +
                            std::to_string(dim_));
    }
    data_.insert(data_.end(), pixels.begin(), pixels.end());
}

NeighborResult finish_neighbor(std::size_t generated_index, std::uint64_t ss1, std::uint64_t ss2,
                               std::size_t nearest_index) {
    NeighborResult r;
    r.generated_index = generated_index;
    r.ss1 = ss1;
    r.ss2 = ss2;
    r.d1 = std::sqrt(static_cast<double>(ss1));
    r.d2 = std::sqrt(static_cast<double>(ss2));
    r.nearest_index = nearest_index;
    r.ratio = ss2 == 0 ? 0.0 : r.d1 / r.d2;
    return r;
}

namespace {

constexpr std::size_t kKernelChunk = 1024;     // bytes between abandon checks
constexpr std::size_t kTrainingTileBytes = 256 * 1024;
constexpr std::size_t kGeneratedBlock = 8;

std::uint32_t chunk_ssd(const std::uint8_t* a, const std::uint8_t* b, std::size_t n) {
    std::uint32_t acc = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const int d = static_cast<int>(a[i]) - static_cast<int>(b[i]);
        acc += static_cast<std::uint32_t>(d * d);
    }
    return acc;
}

// Squared distance, or any value >= bound once the partial sum reaches it.
std::uint64_t bounded_ssd(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b,
                          std::uint64_t bound) {
    std::uint64_t sum = 0;
    for (std::size_t off = 0; off < a.size(); off += kKernelChunk) {
        const std::size_t len = std::min(kKernelChunk, a.size() - off);
        sum += chunk_ssd(a.data() + off, b.data() + off, len);
        if (sum >= bound) return sum;
    }
    return sum;
}

struct Best {
    std::uint64_t ss1 = std::numeric_limits<std::uint64_t>::max();
    std::uint64_t ss2 = std::numeric_limits<std::uint64_t>::max();
    std::size_t idx1 = 0;

    void offer(std::uint64_t d, std::size_t t) {
        if (d < ss1) {
            ss2 = ss1;
            ss1 = d;
            idx1 = t;
        } else if (d < ss2) {
            ss2 = d;
        }
    }
};

}  // namespace

std::vector<NeighborResult> nn_search(const ImageSet& generated, const ImageSet& training, unsigned workers) {
    if (training.size() < 2) throw ArgumentError("nearest-neighbor search needs at least two training images");
    if (generated.size() > 0 && generated.dim() != training.dim()) {
        throw ArgumentError("dimension mismatch: generated " + std::to_string(generated.dim()) + " vs training " +
                            std::to_string(training.dim()));
    }
    const std::size_t dim = training.dim();
    const std::size_t tile = std::max<std::size_t>(1, kTrainingTileBytes / dim);
    const std::size_t blocks = (generated.size() + kGeneratedBlock - 1) / kGeneratedBlock;
    std::vector<NeighborResult> out(generated.size());

    parallel_for(
        blocks, workers,
        [&](std::size_t b) {
            const std::size_t g0 = b * kGeneratedBlock;
            const std::size_t g1 = std::min(generated.size(), g0 + kGeneratedBlock);
            std::vector<Best> best(g1 - g0);
            for (std::size_t t0 = 0; t0 < training.size(); t0 += tile) {
                const std::size_t t1 = std::min(training.size(), t0 + tile);
                for (std::size_t g = g0; g < g1; ++g) {
                    Best& s = best[g - g0];
                    const auto row = generated.row(g);
                    for (std::size_t t = t0; t < t1; ++t) s.offer(bounded_ssd(row, training.row(t), s.ss2), t);
                }
            }
            for (std::size_t g = g0; g < g1; ++g) {
                const Best& s = best[g - g0];
                out[g] = finish_neighbor(g, s.ss1, s.ss2, s.idx1);
            }
        },
        1);
    return out;
}

MemorizationResult memorization_rate(std::span<const NeighborResult> results, const MemorizationConfig& config) {
    if (!(config.k > 0.0 && config.k < 1.0)) throw ArgumentError("memorization threshold k must lie in (0,1)");
    if (results.empty()) throw UndefinedMetricError("memorization rate is undefined without samples");
    MemorizationResult out;
    out.memorized.reserve(results.size());
    for (const auto& r : results) {
        const bool m = r.ratio < config.k;
        out.memorized.push_back(m);
        out.memorized_count += m ? 1 : 0;
    }
    out.rate = static_cast<double>(out.memorized_count) / static_cast<double>(results.size());
    return out;
}

DistanceHistograms distance_histograms(std::span<const NeighborResult> results,
                                       std::span<const std::optional<std::string>> labels, int bins) {
    if (bins < 1) throw ArgumentError("histogram needs at least one bin");
    if (results.empty()) throw UndefinedMetricError("no distances to histogram");
    if (labels.size() != results.size()) throw ValidationError("every result needs a label");
    DistanceHistograms h;
    h.bins = bins;
    h.lo = results.front().d1;
    h.hi = results.front().d1;
    double sum = 0.0;
    for (std::size_t i = 0; i < results.size(); ++i) {
        if (!labels[i]) {
            throw ValidationError("result for generated sample " + std::to_string(results[i].generated_index) +
                                  " has no condition label");
        }
        h.lo = std::min(h.lo, results[i].d1);
        h.hi = std::max(h.hi, results[i].d1);
        sum += results[i].d1;
    }
    if (h.hi == h.lo) h.hi = h.lo + 1.0;
    for (std::size_t i = 0; i < results.size(); ++i) {
        auto& counts = h.per_label[*labels[i]];
        counts.resize(static_cast<std::size_t>(bins), 0);
        const double pos = (results[i].d1 - h.lo) / (h.hi - h.lo) * bins;
        const int b = std::clamp(static_cast<int>(std::floor(pos)), 0, bins - 1);
        ++counts[static_cast<std::size_t>(b)];
    }
    h.mean_d1 = sum / static_cast<double>(results.size());
    return h;
}

}  // namespace mosaic
