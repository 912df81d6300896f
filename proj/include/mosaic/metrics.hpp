#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mosaic/dataset_io.hpp"

namespace mosaic {

struct UndefinedMetricError : std::domain_error {
    using std::domain_error::domain_error;
};

struct AccuracyReport {
    Head head = Head::Count;
    HeadRange range{0, 0};
    std::int64_t n = 0;
    std::int64_t correct = 0;
    double overall = 0.0;
    std::map<int, std::int64_t> per_class_n;
    std::map<int, std::int64_t> per_class_correct;
    std::map<int, double> per_class;
    /// confusion[t][p] counts true class range.lo+t predicted as range.lo+p.
    std::vector<std::vector<std::int64_t>> confusion;
    /// Records of each true class without a usable prediction.
    std::map<int, std::int64_t> unpredicted;
};

/// Mean of 1[predicted == true] over the records. Throws UndefinedMetricError
/// on empty input and ValidationError when a record lacks the head.
AccuracyReport accuracy(std::span<const PredictionRecord> records, Head head);

/// Fraction of records whose every listed head is correct.
double joint_accuracy(std::span<const PredictionRecord> records, std::span<const Head> heads);

/// Equally sized 8-bit images stored as rows of a contiguous matrix.
class ImageSet {
public:
    explicit ImageSet(std::size_t dim = 0) : dim_(dim) {}

    void add(std::span<const std::uint8_t> pixels);
    std::size_t dim() const { return dim_; }
    std::size_t size() const { return dim_ == 0 ? 0 : data_.size() / dim_; }
    std::span<const std::uint8_t> row(std::size_t i) const {
        return {data_.data() + i * dim_, dim_};
    }

private:
    std::size_t dim_;
    std::vector<std::uint8_t> data_;
};

struct NeighborResult {
    std::size_t generated_index = 0;
    /// Exact squared L2 distances to the nearest and second-nearest training rows.
    std::uint64_t ss1 = 0;
    std::uint64_t ss2 = 0;
    double d1 = 0.0;
    double d2 = 0.0;
    std::size_t nearest_index = 0;
    double ratio = 0.0;  // d1 / d2, 0 when d2 == 0

    friend bool operator==(const NeighborResult&, const NeighborResult&) = default;
};

/// Fills d1, d2 and ratio from exact squared distances.
NeighborResult finish_neighbor(std::size_t generated_index, std::uint64_t ss1, std::uint64_t ss2,
                               std::size_t nearest_index);

/// Exact nearest and second-nearest training rows per generated row. Ties go to
/// the lowest training index. Requires at least two training rows.
std::vector<NeighborResult> nn_search(const ImageSet& generated, const ImageSet& training,
                                      unsigned workers = 1);

struct MemorizationConfig {
    double k = 1.0 / 3.0;
};

struct MemorizationResult {
    double rate = 0.0;
    std::int64_t memorized_count = 0;
    std::vector<bool> memorized;
};

/// A sample is memorized iff d1/d2 < k.
MemorizationResult memorization_rate(std::span<const NeighborResult> results,
                                     const MemorizationConfig& config = {});

struct DistanceHistograms {
    double lo = 0.0;
    double hi = 0.0;
    int bins = 0;
    std::map<std::string, std::vector<std::int64_t>> per_label;
    double mean_d1 = 0.0;

    double bin_lower(int b) const { return lo + (hi - lo) * b / bins; }
};

/// Histograms of d1 per label over shared bin edges spanning [min d1, max d1].
/// labels[i] names the condition of results[i]; a missing label is an error.
DistanceHistograms distance_histograms(std::span<const NeighborResult> results,
                                       std::span<const std::optional<std::string>> labels, int bins);

}  // namespace mosaic
