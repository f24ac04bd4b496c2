#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "aquadapt/jsonl.hpp"

namespace aquadapt {

using Tokens = std::vector<std::string>;

enum class Smoothing { none, add_one };

std::string_view to_string(Smoothing smoothing);
Smoothing parse_smoothing(std::string_view text);

struct PRF {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// Corpus-level BLEU-4 on 0..100. With add_one, a zero-match precision for
/// n >= 2 becomes (0 + 1) / (total + 1); unigram precision is never smoothed.
double bleu4(const std::vector<Tokens>& hypotheses, const std::vector<Tokens>& references,
             Smoothing smoothing = Smoothing::add_one);

PRF rouge_n(const Tokens& hypothesis, const Tokens& reference, int n);
PRF rouge_l(const Tokens& hypothesis, const Tokens& reference);

std::size_t lcs_length(const Tokens& a, const Tokens& b);

struct EvalSample {
    std::string id;
    std::string hypothesis;
    std::string reference;
};

struct EvalReport {
    double bleu4 = 0.0;
    double rouge1_f = 0.0;
    double rouge2_f = 0.0;
    double rougeL_f = 0.0;
    std::size_t sample_count = 0;
    Smoothing smoothing = Smoothing::add_one;
};

/// Corpus BLEU plus macro-averaged per-sample ROUGE F1 over token lists.
EvalReport evaluate_tokens(const std::vector<std::pair<Tokens, Tokens>>& pairs,
                           Smoothing smoothing = Smoothing::add_one,
                           std::size_t max_concurrency = 4);

/// Tokenizes with the shared tokenizer (lowercased, punctuation kept as tokens).
EvalReport evaluate_corpus(const std::vector<EvalSample>& samples,
                           Smoothing smoothing = Smoothing::add_one,
                           std::size_t max_concurrency = 4);

/// Metric/Value table; ROUGE shown x100, everything to two decimals.
std::string render_eval_table(const EvalReport& report);

std::vector<EvalSample> load_eval_samples(const std::filesystem::path& path);

void to_json(Json& j, const EvalReport& report);
void from_json(const Json& j, EvalReport& report);

}  // namespace aquadapt
