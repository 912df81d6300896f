#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mosaic {

struct CountMention {
    int number = 0;
    std::string noun;
    std::size_t offset = 0;  // byte offset of the number token in the caption

    friend bool operator==(const CountMention&, const CountMention&) = default;
};

/// Rule stage of count-phrase mining: a number word (one..ten) or digit form
/// (1..10) followed within two tokens by a noun-like token, with currency,
/// date, technical, ordinal, measurement and abstract contexts rejected.
std::vector<CountMention> extract_count_mentions(std::string_view caption);

enum class RelationClass : std::uint8_t { RightOf, LeftOf, Above, Below, NextTo, Behind, InFrontOf };
inline constexpr std::size_t kRelationClassCount = 7;

std::string_view relation_class_name(RelationClass c);  // e.g. "left_of"
std::string_view relation_class_phrase(RelationClass c);  // e.g. "left of"
RelationClass relation_class_from_name(std::string_view name);

/// Phrase groups per relation class. Phrases are matched case-insensitively
/// on whole tokens.
struct RelationPhrases {
    std::vector<std::pair<RelationClass, std::vector<std::string>>> groups;

    static RelationPhrases defaults();
    /// JSON object {"left_of": ["left of", ...], ...}.
    static RelationPhrases from_json_text(std::string_view text);
    static RelationPhrases load(const std::filesystem::path& path);
};

using RelationCounts = std::array<std::int64_t, kRelationClassCount>;

/// Counts explicit phrase occurrences per class. Overlapping matches of the
/// same class (e.g. "to the left of") count once.
RelationCounts extract_relation_mentions(std::string_view caption,
                                         const RelationPhrases& phrases = RelationPhrases::defaults());

enum class MineMode : std::uint8_t { Count, Relation };
MineMode mine_mode_from_name(std::string_view name);

struct FrequencyTable {
    std::map<std::string, std::int64_t> counts;
    std::int64_t total_lines = 0;
    std::int64_t sampled_lines = 0;
    std::int64_t skipped_lines = 0;
    std::int64_t matched_lines = 0;

    void merge(const FrequencyTable& other);
    /// Rows in canonical class order for `mode`.
    std::vector<std::pair<std::string, std::int64_t>> rows(MineMode mode) const;
    friend bool operator==(const FrequencyTable&, const FrequencyTable&) = default;
};

FrequencyTable empty_table(MineMode mode);

struct MineOptions {
    MineMode mode = MineMode::Count;
    double sample_rate = 1.0;
    std::uint64_t seed = 0;
    unsigned workers = 1;
    RelationPhrases phrases = RelationPhrases::defaults();
};

/// Line kept by the deterministic Bernoulli sampler keyed by (seed, line number).
bool sampled(std::uint64_t seed, std::uint64_t line_number, double rate);

struct Candidate {
    std::uint64_t line_number = 0;
    std::string caption;
};

struct MineResult {
    FrequencyTable table;
    /// Sampled lines with at least one rule-stage match.
    std::vector<Candidate> candidates;
};

/// Mines a block of lines whose first line has number `first_line` (0-based).
/// Blocks mined separately and merged equal mining them as one stream.
MineResult mine_lines(const std::vector<std::string>& lines, std::uint64_t first_line, const MineOptions& options);
MineResult mine_stream(std::istream& in, const MineOptions& options);
/// Plain text or gzip (detected from content).
MineResult mine_file(const std::filesystem::path& path, const MineOptions& options);

// ---------------------------------------------------------------------------
// LLM verification stage

struct LlmEndpoint {
    std::string url;  // e.g. http://host:port/v1/chat/completions
    std::string model;
    std::optional<std::string> api_key;
    int max_http_attempts = 3;
    std::chrono::milliseconds backoff{250};
    unsigned max_in_flight = 4;
    std::chrono::seconds timeout{60};
};

/// Prompt text for each mode, followed by the caption in the request.
std::string_view verification_prompt(MineMode mode);

struct Verification {
    bool verified = false;
    std::map<std::string, std::int64_t> counts;
    std::string error;
};

/// Parses the assistant reply into per-class counts; nullopt when malformed.
std::optional<std::map<std::string, std::int64_t>> parse_verification_reply(std::string_view content, MineMode mode);

/// Verifies each candidate against a chat-completion endpoint. HTTP failures
/// are retried with exponential backoff; a malformed reply is retried once.
/// Exhausted candidates come back unverified.
std::vector<Verification> llm_verify(const std::vector<Candidate>& candidates, MineMode mode,
                                     const LlmEndpoint& endpoint);

struct VerifiedSummary {
    std::map<std::string, std::int64_t> counts;
    std::int64_t verified = 0;
    std::int64_t unverified = 0;
};

VerifiedSummary summarize_verifications(const std::vector<Verification>& results, MineMode mode);

}  // namespace mosaic
