#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "aquadapt/genkit.hpp"
#include "aquadapt/jsonl.hpp"
#include "aquadapt/relevance.hpp"
#include "aquadapt/types.hpp"

namespace aquadapt {

namespace cleanup_rule {
inline constexpr std::string_view exact_duplicate = "exact_duplicate";
inline constexpr std::string_view near_duplicate = "near_duplicate";
inline constexpr std::string_view too_short = "too_short";
inline constexpr std::string_view too_long = "too_long";
inline constexpr std::string_view malformed_question = "malformed_question";
inline constexpr std::string_view incomplete_answer = "incomplete_answer";
inline constexpr std::string_view generic_phrase = "generic_phrase";
inline constexpr std::string_view off_topic = "off_topic";
inline constexpr std::string_view judge_drop = "judge_drop";
}  // namespace cleanup_rule

struct CleanupConfig {
    std::size_t min_answer_tokens = 8;
    std::size_t max_answer_tokens = 512;
    double near_dup_threshold = 0.9;
    std::size_t shingle_size = 3;
    std::vector<std::string> generic_phrases = default_generic_phrases();
    std::vector<std::string> interrogative_leads = default_interrogative_leads();
    double relevance_floor = 0.0;
    std::optional<GeneratorRef> judge_assist;
    /// When false, a judge "drop" is recorded as an advisory only.
    bool judge_binding = false;
    std::size_t max_concurrency = 4;

    static std::vector<std::string> default_generic_phrases();
    static std::vector<std::string> default_interrogative_leads();
    void validate() const;
};

struct CleanupVerdict {
    std::string pair_id;
    bool kept = true;
    std::vector<std::string> fired_rules;
    std::vector<std::string> advisories;
};

/// Jaccard overlap of the two token streams' k-token shingle sets. Streams
/// shorter than k contribute one shingle holding the whole stream.
double shingle_overlap(const std::vector<std::string>& a, const std::vector<std::string>& b,
                       std::size_t k);

/// Evaluates every rule for every pair in batch order. Expert-synthetic pairs
/// bypass cleanup and are returned kept with no rules fired. `judge` is only
/// consulted when cfg.judge_assist is set.
std::vector<CleanupVerdict> run_rules(const std::vector<QAPair>& pairs, const Bm25Index& index,
                                      const AquaQuery& query, const CleanupConfig& cfg,
                                      TextBackend* judge = nullptr,
                                      const Bm25Params& params = {});

void to_json(Json& j, const CleanupVerdict& verdict);
void to_json(Json& j, const CleanupConfig& cfg);
void from_json(const Json& j, CleanupConfig& cfg);

}  // namespace aquadapt
