#include "aquadapt/cleanup.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <set>
#include <unordered_set>

#include "aquadapt/dispatch.hpp"
#include "aquadapt/error.hpp"
#include "aquadapt/tokenizer.hpp"

namespace aquadapt {

namespace {

std::set<std::string> shingles(const std::vector<std::string>& tokens, std::size_t k) {
    std::set<std::string> out;
    if (tokens.empty()) {
        return out;
    }
    auto join = [&](std::size_t from, std::size_t to) {
        std::string s;
        for (std::size_t i = from; i < to; ++i) {
            if (i > from) s.push_back(' ');
            s += tokens[i];
        }
        return s;
    };
    if (tokens.size() < k) {
        out.insert(join(0, tokens.size()));
        return out;
    }
    for (std::size_t i = 0; i + k <= tokens.size(); ++i) {
        out.insert(join(i, i + k));
    }
    return out;
}

bool ends_with_sentence_punctuation(std::string_view text) {
    text = trim(text);
    while (!text.empty() && std::string_view("\"')]").find(text.back()) != std::string_view::npos) {
        text.remove_suffix(1);
    }
    return !text.empty() && (text.back() == '.' || text.back() == '!' || text.back() == '?');
}

bool only_boilerplate(const std::vector<std::string>& answer,
                      const std::vector<std::vector<std::string>>& phrases) {
    if (answer.empty()) {
        return false;
    }
    std::size_t i = 0;
    while (i < answer.size()) {
        bool matched = false;
        for (const auto& phrase : phrases) {
            if (!phrase.empty() && i + phrase.size() <= answer.size() &&
                std::equal(phrase.begin(), phrase.end(), answer.begin() + static_cast<long>(i))) {
                i += phrase.size();
                matched = true;
                break;
            }
        }
        if (!matched) {
            return false;
        }
    }
    return true;
}

std::string judge_prompt(const QAPair& pair) {
    return fmt::format(
        "You review aquaculture question-answer pairs extracted from literature. Reply with "
        "exactly one word: keep or drop. Drop pairs that contain claims unsupported by the "
        "question's domain, drift off topic, are incomplete, or are generic.\n\n{}\nQ: {}\nA: {}",
        MockBackend::kCandidateMarker, pair.question, pair.answer);
}

}  // namespace

std::vector<std::string> CleanupConfig::default_generic_phrases() {
    return {"it depends",
            "it varies",
            "as an ai language model",
            "i don't know",
            "i do not know",
            "more research is needed",
            "further research is needed",
            "consult an expert",
            "consult a specialist",
            "there are many factors",
            "it is important to note",
            "in conclusion",
            "this is a complex topic",
            "yes",
            "no"};
}

std::vector<std::string> CleanupConfig::default_interrogative_leads() {
    return {"what", "why", "how", "when", "where", "which",
            "who",  "explain", "describe", "compare", "list"};
}

void CleanupConfig::validate() const {
    if (min_answer_tokens >= max_answer_tokens) {
        fail(ErrorCode::ValidationError,
             fmt::format("min_answer_tokens ({}) must be below max_answer_tokens ({})",
                         min_answer_tokens, max_answer_tokens));
    }
    if (!(near_dup_threshold >= 0.0 && near_dup_threshold <= 1.0)) {
        fail(ErrorCode::ValidationError, "near_dup_threshold must be in [0,1]");
    }
    if (shingle_size == 0) {
        fail(ErrorCode::ValidationError, "shingle_size must be >= 1");
    }
    if (judge_assist) {
        judge_assist->validate();
    }
}

double shingle_overlap(const std::vector<std::string>& a, const std::vector<std::string>& b,
                       std::size_t k) {
    auto sa = shingles(a, k);
    auto sb = shingles(b, k);
    if (sa.empty() && sb.empty()) {
        return 1.0;
    }
    std::size_t common = 0;
    for (const auto& s : sa) {
        common += sb.count(s);
    }
    return static_cast<double>(common) / static_cast<double>(sa.size() + sb.size() - common);
}

std::vector<CleanupVerdict> run_rules(const std::vector<QAPair>& pairs, const Bm25Index& index,
                                      const AquaQuery& query, const CleanupConfig& cfg,
                                      TextBackend* judge, const Bm25Params& params) {
    cfg.validate();
    std::vector<CleanupVerdict> verdicts(pairs.size());
    std::vector<bool> checked(pairs.size(), false);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        verdicts[i].pair_id = pairs[i].id;
        checked[i] = pairs[i].origin == Origin::literature;
    }

    // Duplicate scan: single pass, first occurrence is the representative. Near
    // duplicates are measured against every earlier distinct pair, flagged or
    // not, so raising the threshold can only clear flags.
    std::unordered_set<std::string> seen;
    std::vector<std::vector<std::string>> earlier;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        if (!checked[i]) {
            continue;
        }
        auto key = normalize_for_comparison(pairs[i].question) + "\x1f" +
                   normalize_for_comparison(pairs[i].answer);
        if (!seen.insert(key).second) {
            verdicts[i].fired_rules.emplace_back(cleanup_rule::exact_duplicate);
            continue;
        }
        auto tokens = word_tokens(pairs[i].question + " " + pairs[i].answer);
        bool near = std::any_of(earlier.begin(), earlier.end(), [&](const auto& r) {
            return shingle_overlap(tokens, r, cfg.shingle_size) >= cfg.near_dup_threshold;
        });
        if (near) {
            verdicts[i].fired_rules.emplace_back(cleanup_rule::near_duplicate);
        }
        earlier.push_back(std::move(tokens));
    }

    std::vector<std::vector<std::string>> phrases;
    for (const auto& phrase : cfg.generic_phrases) {
        phrases.push_back(word_tokens(phrase));
    }
    std::set<std::string> leads(cfg.interrogative_leads.begin(), cfg.interrogative_leads.end());

    bounded_parallel_for(pairs.size(), cfg.max_concurrency, [&](std::size_t i) {
        if (!checked[i]) {
            return;
        }
        const auto& pair = pairs[i];
        auto& fired = verdicts[i].fired_rules;
        auto answer_tokens = word_tokens(pair.answer);
        if (answer_tokens.size() < cfg.min_answer_tokens) {
            fired.emplace_back(cleanup_rule::too_short);
        }
        if (answer_tokens.size() > cfg.max_answer_tokens) {
            fired.emplace_back(cleanup_rule::too_long);
        }
        auto question = trim(pair.question);
        auto question_tokens = word_tokens(question);
        bool interrogative = !question_tokens.empty() && leads.count(question_tokens.front()) > 0;
        if ((question.empty() || question.back() != '?') && !interrogative) {
            fired.emplace_back(cleanup_rule::malformed_question);
        }
        if (!ends_with_sentence_punctuation(pair.answer)) {
            fired.emplace_back(cleanup_rule::incomplete_answer);
        }
        if (only_boilerplate(answer_tokens, phrases)) {
            fired.emplace_back(cleanup_rule::generic_phrase);
        }
        if (bm25_score_text(pair.question + " " + pair.answer, query, index, params) <
            cfg.relevance_floor) {
            fired.emplace_back(cleanup_rule::off_topic);
        }
        if (cfg.judge_assist && judge) {
            try {
                auto reply = to_lower_ascii(trim(judge->complete({judge_prompt(pair), 0})));
                if (reply == "drop") {
                    if (cfg.judge_binding) {
                        fired.emplace_back(cleanup_rule::judge_drop);
                    } else {
                        verdicts[i].advisories.emplace_back(cleanup_rule::judge_drop);
                    }
                } else if (reply != "keep") {
                    verdicts[i].advisories.push_back("judge_unparseable: " + reply);
                }
            } catch (const Error& e) {
                verdicts[i].advisories.push_back(std::string("judge_error: ") + e.what());
            }
        }
    });

    for (auto& verdict : verdicts) {
        verdict.kept = verdict.fired_rules.empty();
    }
    return verdicts;
}

void to_json(Json& j, const CleanupVerdict& verdict) {
    j = Json{{"pair_id", verdict.pair_id},
             {"kept", verdict.kept},
             {"fired_rules", verdict.fired_rules},
             {"advisories", verdict.advisories}};
}

void to_json(Json& j, const CleanupConfig& cfg) {
    j = Json{{"min_answer_tokens", cfg.min_answer_tokens},
             {"max_answer_tokens", cfg.max_answer_tokens},
             {"near_dup_threshold", cfg.near_dup_threshold},
             {"shingle_size", cfg.shingle_size},
             {"generic_phrases", cfg.generic_phrases},
             {"interrogative_leads", cfg.interrogative_leads},
             {"relevance_floor", cfg.relevance_floor},
             {"judge_binding", cfg.judge_binding},
             {"max_concurrency", cfg.max_concurrency}};
    j["judge_assist"] = cfg.judge_assist ? Json(*cfg.judge_assist) : Json(nullptr);
}

void from_json(const Json& j, CleanupConfig& cfg) {
    CleanupConfig defaults;
    cfg.min_answer_tokens = j.value("min_answer_tokens", defaults.min_answer_tokens);
    cfg.max_answer_tokens = j.value("max_answer_tokens", defaults.max_answer_tokens);
    cfg.near_dup_threshold = j.value("near_dup_threshold", defaults.near_dup_threshold);
    cfg.shingle_size = j.value("shingle_size", defaults.shingle_size);
    cfg.generic_phrases = j.value("generic_phrases", defaults.generic_phrases);
    cfg.interrogative_leads = j.value("interrogative_leads", defaults.interrogative_leads);
    cfg.relevance_floor = j.value("relevance_floor", defaults.relevance_floor);
    cfg.judge_binding = j.value("judge_binding", false);
    cfg.max_concurrency = j.value("max_concurrency", defaults.max_concurrency);
    if (j.contains("judge_assist") && !j.at("judge_assist").is_null()) {
        cfg.judge_assist = j.at("judge_assist").get<GeneratorRef>();
    } else {
        cfg.judge_assist.reset();
    }
    cfg.validate();
}

}  // namespace aquadapt
