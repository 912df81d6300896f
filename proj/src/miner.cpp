#include "mosaic/miner.hpp"

#include <zlib.h>

#include <algorithm>
#include <cctype>
#include <memory>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"
#include "mosaic/dataset_io.hpp"
#include "mosaic/parallel.hpp"

namespace mosaic {

namespace {

struct Token {
    std::string text;  // lower-cased
    std::size_t begin;
    std::size_t end;
};

bool word_byte(unsigned char c) { return std::isalnum(c) || c >= 0x80; }

std::vector<Token> tokenize(std::string_view s) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < s.size()) {
        if (!word_byte(static_cast<unsigned char>(s[i]))) {
            ++i;
            continue;
        }
        const std::size_t b = i;
        std::string text;
        while (i < s.size() && word_byte(static_cast<unsigned char>(s[i]))) {
            text += static_cast<char>(std::tolower(static_cast<unsigned char>(s[i])));
            ++i;
        }
        out.push_back({std::move(text), b, i});
    }
    return out;
}

using Lexicon = std::unordered_set<std::string_view>;

const std::unordered_map<std::string_view, int>& number_words() {
    static const std::unordered_map<std::string_view, int> m{
        {"one", 1}, {"two", 2},   {"three", 3}, {"four", 4}, {"five", 5}, {"six", 6},  {"seven", 7},
        {"eight", 8}, {"nine", 9}, {"ten", 10},  {"1", 1},    {"2", 2},    {"3", 3},    {"4", 4},
        {"5", 5},   {"6", 6},     {"7", 7},     {"8", 8},    {"9", 9},    {"10", 10}};
    return m;
}

std::optional<int> number_value(const std::string& token) {
    const auto& m = number_words();
    auto it = m.find(token);
    if (it == m.end()) return std::nullopt;
    return it->second;
}

// Tokens that, right before the number, mark money, product names or technical contexts.
const Lexicon& preceding_exclusions() {
    static const Lexicon l{"price", "prices", "priced", "usd",  "eur",     "gbp",     "aud",    "cad",
                           "jpy",   "cny",    "inr",    "rs",   "cost",    "costs",   "msrp",   "usb",
                           "iphone", "ipad",  "ipod",   "galaxy", "pixel", "windows", "android", "ios",
                           "version", "v",    "ver",    "gen",  "generation", "series", "model", "type",
                           "mark",  "mk",     "ps",     "xbox", "playstation", "hdmi", "bluetooth", "level",
                           "no",    "number", "vol",    "volume", "chapter", "part",  "page",   "episode",
                           "season", "issue", "step",   "grade", "size",   "top",     "rank",   "lot",
                           "january", "february", "march", "april", "june", "july", "august", "september",
                           "october", "november", "december", "jan", "feb", "mar", "apr", "jun", "jul",
                           "aug", "sep", "sept", "oct", "nov", "dec", "route", "highway", "room", "table",
                           "gate", "platform", "track", "day", "week", "year", "class", "category"};
    return l;
}

// Noun positions that never count: money, time, units, technical suffixes, ordinal
// contexts and abstract concepts.
const Lexicon& noun_exclusions() {
    static const Lexicon l{
        // money
        "dollar", "dollars", "euro", "euros", "cent", "cents", "credit", "credits", "bucks", "usd", "eur",
        "gbp", "yen", "pence", "quid",
        // dates and time
        "year", "years", "yr", "yrs", "day", "days", "week", "weeks", "month", "months", "hour", "hours",
        "hr", "hrs", "minute", "minutes", "min", "mins", "second", "seconds", "sec", "secs", "decade",
        "decades", "century", "centuries", "night", "nights", "time", "times", "am", "pm", "ago",
        "season", "seasons", "weekend", "weekends", "morning", "mornings", "evening", "evenings",
        // technical specs
        "k", "resolution", "mp", "megapixel", "megapixels", "gb", "mb", "tb", "kb", "ghz", "mhz", "hz",
        "x", "bit", "bits", "core", "cores", "speed", "star", "stars",
        // ordinal contexts
        "place", "grade", "edition", "anniversary", "birthday", "st", "nd", "rd", "th",
        // measurements
        "inch", "inches", "in", "ft", "foot", "feet", "yard", "yards", "yd", "mile", "miles", "mi", "mm",
        "cm", "m", "km", "meter", "meters", "metre", "metres", "centimeter", "centimeters", "millimeter",
        "millimeters", "kilometer", "kilometers", "kg", "g", "gram", "grams", "kilogram", "kilograms",
        "lb", "lbs", "pound", "pounds", "ounce", "ounces", "oz", "ton", "tons", "tonne", "tonnes", "liter",
        "liters", "litre", "litres", "l", "ml", "gallon", "gallons", "gal", "percent", "pct", "degree",
        "degrees", "mph", "kph", "volt", "volts", "watt", "watts", "w", "amp", "amps", "mah", "acre",
        "acres", "sq", "square", "cubic", "qt", "quart", "quarts", "pint", "pints",
        // abstract concepts
        "idea", "ideas", "reason", "reasons", "way", "ways", "thing", "things", "tip", "tips", "step",
        "steps", "question", "questions", "thought", "thoughts", "word", "words", "fact", "facts", "option",
        "options", "lesson", "lessons", "rule", "rules", "secret", "secrets", "benefit", "benefits",
        "mistake", "mistakes", "sign", "signs", "trick", "tricks", "method", "methods", "problem",
        "problems", "solution", "solutions", "strategy", "strategies", "goal", "goals", "dream", "dreams",
        "love", "life", "chance", "chances", "point", "points", "feature", "features", "level", "levels",
        "version", "versions", "part", "parts", "piece", "pieces", "kind", "kinds", "type", "types",
        "style", "styles", "size", "sizes", "color", "colors", "colour", "colours", "player", "players",
        "bedroom", "bedrooms", "bathroom", "bathrooms", "bath", "baths", "pack", "set",
        "sets", "pair", "pairs", "pc", "pcs", "lot", "lots", "count", "dozen", "hundred", "thousand",
        "million", "billion"};
    return l;
}

// Adjective-like modifiers that may sit between the number and the noun.
const Lexicon& modifiers() {
    static const Lexicon l{
        "small", "large", "big", "tall", "little", "tiny", "huge", "giant", "short", "long", "mini",
        "medium", "red", "green", "blue", "yellow", "purple", "orange", "cyan", "gray", "grey", "white",
        "black", "brown", "pink", "gold", "golden", "silver", "old", "new", "young", "cute", "beautiful",
        "pretty", "happy", "wooden", "vintage", "modern", "different", "identical", "matching", "adorable",
        "fluffy", "tiny", "wild", "baby", "dark", "light", "bright", "empty", "full", "round", "square",
        "wide", "narrow", "heavy", "huge", "fat", "thin", "smiling", "sleeping", "running", "playing",
        "standing", "sitting", "colorful", "colourful", "antique", "classic", "metal", "plastic", "glass",
        "stone", "brick", "paper", "leather", "ceramic", "tall", "enormous", "massive", "lovely"};
    return l;
}

const Lexicon& stopwords() {
    static const Lexicon l{
        "a", "an", "the", "of", "and", "or", "to", "in", "on", "at", "for", "with", "by", "from", "is",
        "are", "was", "were", "be", "been", "being", "it", "its", "this", "that", "these", "those", "as",
        "but", "not", "no", "so", "if", "then", "than", "too", "very", "more", "most", "less", "other",
        "others", "another", "each", "every", "all", "any", "some", "such", "only", "own", "same", "just",
        "about", "up", "down", "out", "off", "over", "under", "again", "i", "you", "he", "she", "we",
        "they", "me", "him", "her", "us", "them", "my", "your", "his", "our", "their", "has", "have", "had",
        "do", "does", "did", "will", "would", "can", "could", "should", "may", "might", "must", "shall",
        "into", "onto", "per", "via", "vs", "s", "t", "there", "here", "who", "which", "what", "when",
        "where", "why", "how", "also", "both", "either", "neither", "nor", "yet", "after", "before",
        "while", "during", "between", "among", "through", "without", "within", "like", "plus", "minus",
        "times", "way"};
    return l;
}

bool digits_only(std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

bool has_digit(std::string_view s) {
    return std::any_of(s.begin(), s.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

// Money, percent, decimals, times and dates glued to the number token.
bool glued_context(std::string_view s, const Token& t) {
    std::size_t b = t.begin;
    while (b > 0 && s[b - 1] == ' ') --b;
    if (b > 0) {
        const char prev = s[b - 1];
        if (prev == '$' || prev == '#') return true;
        if (b >= 2 && static_cast<unsigned char>(s[b - 2]) == 0xC2 &&
            (static_cast<unsigned char>(prev) == 0xA3 || static_cast<unsigned char>(prev) == 0xA5)) {
            return true;  // £ ¥
        }
        if (b >= 3 && static_cast<unsigned char>(s[b - 3]) == 0xE2 && static_cast<unsigned char>(s[b - 2]) == 0x82 &&
            static_cast<unsigned char>(prev) == 0xAC) {
            return true;  // €
        }
    }
    if (t.begin >= 2 && std::string_view(".:/,-").find(s[t.begin - 1]) != std::string_view::npos &&
        std::isdigit(static_cast<unsigned char>(s[t.begin - 2]))) {
        return true;
    }
    if (t.end < s.size()) {
        const char next = s[t.end];
        if (next == '%') return true;
        if (t.end + 1 < s.size() && std::string_view(".:/,-").find(next) != std::string_view::npos &&
            std::isdigit(static_cast<unsigned char>(s[t.end + 1]))) {
            return true;
        }
    }
    return false;
}

enum class NounCheck { Noun, Modifier, Reject };

NounCheck classify_follower(const Token& t) {
    if (modifiers().count(t.text)) return NounCheck::Modifier;
    if (has_digit(t.text) || number_value(t.text)) return NounCheck::Reject;
    if (t.text.size() < 2) return NounCheck::Reject;
    if (stopwords().count(t.text) || noun_exclusions().count(t.text)) return NounCheck::Reject;
    return NounCheck::Noun;
}

}  // namespace

std::vector<CountMention> extract_count_mentions(std::string_view caption) {
    std::vector<CountMention> out;
    const auto tokens = tokenize(caption);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const auto value = number_value(tokens[i].text);
        if (!value) continue;
        if (digits_only(tokens[i].text) && glued_context(caption, tokens[i])) continue;
        if (i > 0 && preceding_exclusions().count(tokens[i - 1].text)) continue;
        // "one" as a pronoun or in fixed phrases: "no one", "the one", "this one".
        if (tokens[i].text == "one" && i > 0 &&
            (tokens[i - 1].text == "no" || tokens[i - 1].text == "the" || tokens[i - 1].text == "this" ||
             tokens[i - 1].text == "that" || tokens[i - 1].text == "every" || tokens[i - 1].text == "any")) {
            continue;
        }
        for (std::size_t k = i + 1; k < tokens.size() && k <= i + 2; ++k) {
            const NounCheck c = classify_follower(tokens[k]);
            if (c == NounCheck::Reject) break;
            if (c == NounCheck::Noun) {
                // Trailing "ago" turns "two days"-like spans into dates even for unknown nouns.
                if (k + 1 < tokens.size() && tokens[k + 1].text == "ago") break;
                out.push_back({*value, tokens[k].text, tokens[i].begin});
                break;
            }
        }
    }
    return out;
}

std::string_view relation_class_name(RelationClass c) {
    static constexpr std::array<std::string_view, kRelationClassCount> names{
        "right_of", "left_of", "above", "below", "next_to", "behind", "in_front_of"};
    return names[static_cast<std::size_t>(c)];
}

std::string_view relation_class_phrase(RelationClass c) {
    static constexpr std::array<std::string_view, kRelationClassCount> names{
        "right of", "left of", "above", "below", "next to", "behind", "in front of"};
    return names[static_cast<std::size_t>(c)];
}

RelationClass relation_class_from_name(std::string_view name) {
    for (std::size_t i = 0; i < kRelationClassCount; ++i) {
        const auto c = static_cast<RelationClass>(i);
        if (name == relation_class_name(c) || name == relation_class_phrase(c)) return c;
    }
    throw ArgumentError("unknown relation class '" + std::string(name) + "'");
}

RelationPhrases RelationPhrases::defaults() {
    return {{
        {RelationClass::RightOf, {"right of", "the right", "to the right", "on the right"}},
        {RelationClass::LeftOf, {"left of", "the left", "to the left", "on the left"}},
        {RelationClass::Above, {"top of", "above", "the top", "on top of", "over"}},
        {RelationClass::Below, {"bottom of", "below", "the bottom", "under", "beneath"}},
        {RelationClass::NextTo, {"next to", "on side of", "near", "beside"}},
        {RelationClass::Behind, {"behind", "hidden", "in back of"}},
        {RelationClass::InFrontOf, {"in front of", "in the front"}},
    }};
}

RelationPhrases RelationPhrases::from_json_text(std::string_view text) {
    const auto j = nlohmann::ordered_json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw ParseError("relation phrase file must be a JSON object");
    RelationPhrases out;
    for (const auto& [key, value] : j.items()) {
        const RelationClass c = relation_class_from_name(key);
        if (!value.is_array()) throw ParseError("phrases for '" + key + "' must be an array");
        std::vector<std::string> phrases;
        for (const auto& p : value) {
            if (!p.is_string() || tokenize(p.get<std::string>()).empty()) {
                throw ParseError("phrase for '" + key + "' must be a non-empty string");
            }
            phrases.push_back(p.get<std::string>());
        }
        out.groups.emplace_back(c, std::move(phrases));
    }
    return out;
}

RelationPhrases RelationPhrases::load(const std::filesystem::path& path) {
    return from_json_text(read_text_file(path));
}

RelationCounts extract_relation_mentions(std::string_view caption, const RelationPhrases& phrases) {
    RelationCounts counts{};
    const auto tokens = tokenize(caption);
    for (const auto& [cls, group] : phrases.groups) {
        std::vector<std::vector<std::string>> patterns;
        for (const auto& p : group) {
            std::vector<std::string> words;
            for (auto& t : tokenize(p)) words.push_back(std::move(t.text));
            patterns.push_back(std::move(words));
        }
        std::size_t next_free = 0;
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            std::size_t longest = 0;
            for (const auto& pat : patterns) {
                if (pat.size() <= longest || i + pat.size() > tokens.size()) continue;
                bool match = true;
                for (std::size_t k = 0; k < pat.size() && match; ++k) match = tokens[i + k].text == pat[k];
                if (match) longest = pat.size();
            }
            if (longest == 0 || i < next_free) continue;
            ++counts[static_cast<std::size_t>(cls)];
            next_free = i + longest;
        }
    }
    return counts;
}

MineMode mine_mode_from_name(std::string_view name) {
    if (name == "count") return MineMode::Count;
    if (name == "relation") return MineMode::Relation;
    throw ArgumentError("unknown mining mode '" + std::string(name) + "'");
}

void FrequencyTable::merge(const FrequencyTable& other) {
    for (const auto& [k, v] : other.counts) counts[k] += v;
    total_lines += other.total_lines;
    sampled_lines += other.sampled_lines;
    skipped_lines += other.skipped_lines;
    matched_lines += other.matched_lines;
}

FrequencyTable empty_table(MineMode mode) {
    FrequencyTable t;
    if (mode == MineMode::Count) {
        for (int n = 1; n <= 10; ++n) t.counts[std::to_string(n)] = 0;
    } else {
        for (std::size_t i = 0; i < kRelationClassCount; ++i) {
            t.counts[std::string(relation_class_name(static_cast<RelationClass>(i)))] = 0;
        }
    }
    return t;
}

std::vector<std::pair<std::string, std::int64_t>> FrequencyTable::rows(MineMode mode) const {
    std::vector<std::pair<std::string, std::int64_t>> out;
    auto value = [this](const std::string& k) {
        auto it = counts.find(k);
        return it == counts.end() ? std::int64_t{0} : it->second;
    };
    if (mode == MineMode::Count) {
        for (int n = 1; n <= 10; ++n) out.emplace_back(std::to_string(n), value(std::to_string(n)));
    } else {
        for (std::size_t i = 0; i < kRelationClassCount; ++i) {
            const std::string k(relation_class_name(static_cast<RelationClass>(i)));
            out.emplace_back(k, value(k));
        }
    }
    return out;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

bool valid_utf8(std::string_view s) {
    std::size_t i = 0;
    while (i < s.size()) {
        const auto c = static_cast<unsigned char>(s[i]);
        if (c == 0) return false;
        std::size_t extra = 0;
        if (c < 0x80) extra = 0;
        else if ((c >> 5) == 0x6) extra = 1;
        else if ((c >> 4) == 0xE) extra = 2;
        else if ((c >> 3) == 0x1E) extra = 3;
        else return false;
        if (i + extra >= s.size() && extra > 0) return false;
        for (std::size_t k = 1; k <= extra; ++k) {
            if ((static_cast<unsigned char>(s[i + k]) >> 6) != 0x2) return false;
        }
        i += extra + 1;
    }
    return true;
}

struct LineOutcome {
    bool skipped = false;
    bool sampled = false;
    bool matched = false;
    std::vector<std::pair<std::size_t, std::int64_t>> hits;  // class slot, count
};

}  // namespace

bool sampled(std::uint64_t seed, std::uint64_t line_number, double rate) {
    if (rate >= 1.0) return true;
    const std::uint64_t h = splitmix64(seed ^ splitmix64(line_number));
    return static_cast<double>(h >> 11) * 0x1.0p-53 < rate;
}

MineResult mine_lines(const std::vector<std::string>& lines, std::uint64_t first_line, const MineOptions& options) {
    if (!(options.sample_rate > 0.0 && options.sample_rate <= 1.0)) {
        throw ArgumentError("sample rate must lie in (0, 1]");
    }
    std::vector<LineOutcome> outcomes(lines.size());
    parallel_for(
        lines.size(), options.workers,
        [&](std::size_t i) {
            LineOutcome& o = outcomes[i];
            if (!valid_utf8(lines[i])) {
                o.skipped = true;
                return;
            }
            if (!sampled(options.seed, first_line + i, options.sample_rate)) return;
            o.sampled = true;
            if (options.mode == MineMode::Count) {
                for (const auto& m : extract_count_mentions(lines[i])) {
                    o.hits.emplace_back(static_cast<std::size_t>(m.number), 1);
                }
            } else {
                const auto counts = extract_relation_mentions(lines[i], options.phrases);
                for (std::size_t c = 0; c < counts.size(); ++c) {
                    if (counts[c] > 0) o.hits.emplace_back(c, counts[c]);
                }
            }
            o.matched = !o.hits.empty();
        },
        256);

    MineResult result;
    result.table = empty_table(options.mode);
    result.table.total_lines = static_cast<std::int64_t>(lines.size());
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const LineOutcome& o = outcomes[i];
        if (o.skipped) ++result.table.skipped_lines;
        if (o.sampled) ++result.table.sampled_lines;
        if (!o.matched) continue;
        ++result.table.matched_lines;
        for (const auto& [slot, n] : o.hits) {
            const std::string key = options.mode == MineMode::Count
                                        ? std::to_string(slot)
                                        : std::string(relation_class_name(static_cast<RelationClass>(slot)));
            result.table.counts[key] += n;
        }
        result.candidates.push_back({first_line + i, lines[i]});
    }
    return result;
}

namespace {

constexpr std::size_t kBlockLines = 1 << 16;

template <typename NextLine>
MineResult mine_blocks(NextLine&& next_line, const MineOptions& options) {
    MineResult total;
    total.table = empty_table(options.mode);
    std::vector<std::string> block;
    std::uint64_t line_number = 0;
    std::string line;
    bool more = true;
    while (more) {
        block.clear();
        while (block.size() < kBlockLines && (more = next_line(line))) block.push_back(line);
        if (block.empty()) break;
        MineResult part = mine_lines(block, line_number, options);
        line_number += block.size();
        total.table.merge(part.table);
        std::move(part.candidates.begin(), part.candidates.end(), std::back_inserter(total.candidates));
    }
    return total;
}

}  // namespace

MineResult mine_stream(std::istream& in, const MineOptions& options) {
    return mine_blocks(
        [&in](std::string& line) {
            if (!std::getline(in, line)) return false;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            return true;
        },
        options);
}

MineResult mine_file(const std::filesystem::path& path, const MineOptions& options) {
    std::unique_ptr<gzFile_s, decltype(&gzclose)> file(gzopen(path.c_str(), "rb"), &gzclose);
    if (!file) throw std::runtime_error("cannot open " + path.string());
    std::vector<char> buf(1 << 16);
    return mine_blocks(
        [&](std::string& line) {
            line.clear();
            bool any = false;
            while (gzgets(file.get(), buf.data(), static_cast<int>(buf.size())) != nullptr) {
                any = true;
                line += buf.data();
                if (!line.empty() && line.back() == '\n') break;
            }
            if (!any) {
                int err = Z_OK;
                const char* msg = gzerror(file.get(), &err);
                if (err != Z_OK && err != Z_STREAM_END) throw std::runtime_error("read error in " + path.string() + ": " + msg);
                return false;
            }
            if (!line.empty() && line.back() == '\n') line.pop_back();
            if (!line.empty() && line.back() == '\r') line.pop_back();
            return true;
        },
        options);
}

}  // namespace mosaic
