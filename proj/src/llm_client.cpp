#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include <regex>
#include <thread>

#include "json.hpp"
#include "mosaic/miner.hpp"
#include "mosaic/parallel.hpp"
#include "mosaic/scene.hpp"

namespace mosaic {

namespace {

constexpr std::string_view kCountPrompt =
    "Find number words (one, two, three, four, five, six, seven, eight, nine, ten) that appear next to or "
    "very close to nouns describing countable physical things of any size. ONLY count when:\n"
    "- The number word is adjacent to or within 1-2 words of a concrete noun (like: two dogs, one red car, "
    "three small boxes, four tall buildings, two large ships)\n"
    "- The pattern clearly indicates how many X where X is any physical object, structure, vehicle, person, "
    "animal, or countable item\n"
    "- Includes small objects (toys, books, cups), medium objects (cars, furniture, appliances), and large "
    "objects (buildings, ships, planes, trees)\n"
    "- The context is unambiguous and clearly refers to counting physical things\n"
    "NEVER count when:\n"
    "- Near price/money terms: `Price: 1 Credit, $5, USD 2\n"
    "- Part of dates/years: 2019, one year ago\n"
    "- Technical specs: USB 3.0, 4K resolution, iPhone 5\n"
    "- Ordinals: 1st place, third grade\n"
    "- Measurements: 5 inches, 10 pounds, 3 meters\n"
    "- Abstract concepts: one idea, two reasons\n"
    "- Context is ambiguous or unclear\n"
    "RULE: If its ambiguous, dont count. Only count clear, obvious number+object patterns regardless of "
    "object size.";

constexpr std::string_view kRelationPrompt =
    "Count spatial position phrases in this caption. Look for these EXACT phrases that describe object "
    "locations:\n"
    "ONLY count if you see these EXACT words describing WHERE objects are positioned:\n"
    "• 'right of', 'to the right', 'on the right' - objects positioned to the right\n"
    "• 'left of', 'to the left', 'on the left' - objects positioned to the left\n"
    "• 'above', 'on Top of', 'over' - objects positioned higher\n"
    "• 'below', 'under', 'beneath' - objects positioned lower\n"
    "• 'behind', 'in back of' - objects positioned in back\n"
    "• 'in front of', 'in the front' - objects positioned in front\n"
    "• 'next to', 'beside', 'near' - objects positioned adjacent\n"
    "CRITICAL: Only count if these phrases are actually present in the text describing object positions.\n"
    "DO NOT count words that are not explicitly in the caption.\n"
    "DO NOT make assumptions about implied positions.\n"
    "Instructions:\n"
    "1. Read the caption carefully\n"
    "2. Look for the EXACT spatial phrases listed above\n"
    "3. Count ONLY what is explicitly written\n"
    "4. If none found, all counts should be 0";

constexpr std::string_view kCountFormat =
    "Reply with only a JSON object mapping each counted number (1-10) to how many times it is counted, "
    "for example {\"2\": 1}. Reply {} when nothing counts.";

constexpr std::string_view kRelationFormat =
    "Reply with only a JSON object with integer counts for the keys \"right of\", \"left of\", \"above\", "
    "\"below\", \"next to\", \"behind\", \"in front of\".";

std::optional<std::string> count_key(const std::string& key) {
    static const std::array<std::string_view, 10> words{"one", "two", "three", "four", "five",
                                                         "six", "seven", "eight", "nine", "ten"};
    for (int n = 1; n <= 10; ++n) {
        if (key == std::to_string(n) || key == words[static_cast<std::size_t>(n - 1)]) return std::to_string(n);
    }
    return std::nullopt;
}

struct ParsedUrl {
    std::string origin;  // scheme://host[:port]
    std::string path;
};

ParsedUrl parse_url(const std::string& url) {
    static const std::regex re(R"(^(https?://[^/]+)(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(url, m, re)) throw ArgumentError("invalid endpoint URL '" + url + "'");
    return {m[1].str(), m[2].matched ? m[2].str() : std::string("/")};
}

// One chat-completion exchange; nullopt when every HTTP attempt failed.
std::optional<std::string> post_with_retries(const LlmEndpoint& ep, const ParsedUrl& url, const std::string& body,
                                             std::string& error) {
    for (int attempt = 0; attempt < ep.max_http_attempts; ++attempt) {
        if (attempt > 0) std::this_thread::sleep_for(ep.backoff * (1 << (attempt - 1)));
        httplib::Client client(url.origin);
        client.set_connection_timeout(ep.timeout);
        client.set_read_timeout(ep.timeout);
        httplib::Headers headers;
        if (ep.api_key) headers.emplace("Authorization", "Bearer " + *ep.api_key);
        auto res = client.Post(url.path, headers, body, "application/json");
        if (!res) {
            error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status < 200 || res->status >= 300) {
            error = "HTTP " + std::to_string(res->status);
            continue;
        }
        return res->body;
    }
    return std::nullopt;
}

std::optional<std::string> reply_content(const std::string& body) {
    const auto j = nlohmann::json::parse(body, nullptr, false);
    if (j.is_discarded() || !j.is_object()) return std::nullopt;
    auto choices = j.find("choices");
    if (choices == j.end() || !choices->is_array() || choices->empty()) return std::nullopt;
    const auto& first = (*choices)[0];
    if (!first.is_object() || !first.contains("message")) return std::nullopt;
    const auto& message = first["message"];
    if (!message.is_object() || !message.contains("content") || !message["content"].is_string()) {
        return std::nullopt;
    }
    return message["content"].get<std::string>();
}

}  // namespace

std::string_view verification_prompt(MineMode mode) {
    return mode == MineMode::Count ? kCountPrompt : kRelationPrompt;
}

std::optional<std::map<std::string, std::int64_t>> parse_verification_reply(std::string_view content, MineMode mode) {
    const auto open = content.find('{');
    const auto close = content.rfind('}');
    if (open == std::string_view::npos || close == std::string_view::npos || close < open) return std::nullopt;
    const auto j = nlohmann::json::parse(content.substr(open, close - open + 1), nullptr, false);
    if (j.is_discarded() || !j.is_object()) return std::nullopt;
    std::map<std::string, std::int64_t> out;
    for (const auto& [key, value] : j.items()) {
        if (!value.is_number_integer() || value.get<std::int64_t>() < 0) return std::nullopt;
        std::string cls;
        if (mode == MineMode::Count) {
            const auto k = count_key(key);
            if (!k) return std::nullopt;
            cls = *k;
        } else {
            try {
                cls = relation_class_name(relation_class_from_name(key));
            } catch (const ArgumentError&) {
                return std::nullopt;
            }
        }
        out[cls] += value.get<std::int64_t>();
    }
    return out;
}

std::vector<Verification> llm_verify(const std::vector<Candidate>& candidates, MineMode mode,
                                     const LlmEndpoint& endpoint) {
    if (endpoint.url.empty() || endpoint.model.empty()) throw ArgumentError("LLM endpoint URL and model are required");
    const ParsedUrl url = parse_url(endpoint.url);
    std::vector<Verification> out(candidates.size());

    parallel_for(
        candidates.size(), std::max(1u, endpoint.max_in_flight),
        [&](std::size_t i) {
            nlohmann::ordered_json request;
            request["model"] = endpoint.model;
            request["temperature"] = 0;
            request["messages"] = nlohmann::ordered_json::array(
                {{{"role", "user"},
                  {"content", std::string(verification_prompt(mode)) + "\n\nCaption: " + candidates[i].caption +
                                  "\n\n" + std::string(mode == MineMode::Count ? kCountFormat : kRelationFormat)}}});
            const std::string body = request.dump();

            Verification& v = out[i];
            for (int parse_attempt = 0; parse_attempt < 2; ++parse_attempt) {
                std::string error;
                const auto response = post_with_retries(endpoint, url, body, error);
                if (!response) {
                    v.error = error;
                    return;
                }
                const auto content = reply_content(*response);
                auto parsed = content ? parse_verification_reply(*content, mode) : std::nullopt;
                if (parsed) {
                    v.verified = true;
                    v.counts = std::move(*parsed);
                    v.error.clear();
                    return;
                }
                v.error = "malformed reply";
            }
        },
        1);
    return out;
}

VerifiedSummary summarize_verifications(const std::vector<Verification>& results, MineMode mode) {
    VerifiedSummary s;
    s.counts = empty_table(mode).counts;
    for (const auto& v : results) {
        if (!v.verified) {
            ++s.unverified;
            continue;
        }
        ++s.verified;
        for (const auto& [k, n] : v.counts) s.counts[k] += n;
    }
    return s;
}

}  // namespace mosaic
