#include "aquadapt/evalnlg.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <map>

#include "aquadapt/dispatch.hpp"
#include "aquadapt/error.hpp"
#include "aquadapt/tokenizer.hpp"

namespace aquadapt {

namespace {

using NgramCounts = std::map<std::vector<std::string>, std::size_t>;

NgramCounts ngrams(const Tokens& tokens, std::size_t n) {
    NgramCounts out;
    if (tokens.size() < n) {
        return out;
    }
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
        ++out[Tokens(tokens.begin() + static_cast<long>(i), tokens.begin() + static_cast<long>(i + n))];
    }
    return out;
}

// (clipped matches, hypothesis n-gram total)
std::pair<std::size_t, std::size_t> clipped_overlap(const Tokens& hyp, const Tokens& ref,
                                                    std::size_t n) {
    auto h = ngrams(hyp, n);
    auto r = ngrams(ref, n);
    std::size_t matches = 0;
    std::size_t total = 0;
    for (const auto& [gram, count] : h) {
        total += count;
        auto it = r.find(gram);
        if (it != r.end()) {
            matches += std::min(count, it->second);
        }
    }
    return {matches, total};
}

PRF prf(double overlap, double hyp_total, double ref_total) {
    PRF out;
    out.precision = hyp_total > 0 ? overlap / hyp_total : 0.0;
    out.recall = ref_total > 0 ? overlap / ref_total : 0.0;
    double sum = out.precision + out.recall;
    out.f1 = sum > 0 ? 2.0 * out.precision * out.recall / sum : 0.0;
    return out;
}

struct BleuStats {
    std::array<std::size_t, 4> matches{};
    std::array<std::size_t, 4> totals{};
    std::size_t hyp_len = 0;
    std::size_t ref_len = 0;
};

BleuStats sentence_stats(const Tokens& hyp, const Tokens& ref) {
    BleuStats s;
    for (std::size_t n = 1; n <= 4; ++n) {
        auto [m, t] = clipped_overlap(hyp, ref, n);
        s.matches[n - 1] = m;
        s.totals[n - 1] = t;
    }
    s.hyp_len = hyp.size();
    s.ref_len = ref.size();
    return s;
}

double bleu_from_stats(const BleuStats& s, Smoothing smoothing) {
    if (s.hyp_len == 0) {
        fail(ErrorCode::EmptyHypothesis, "BLEU is undefined for an empty hypothesis corpus");
    }
    double log_sum = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
        double m = static_cast<double>(s.matches[i]);
        double t = static_cast<double>(s.totals[i]);
        if (s.matches[i] == 0) {
            if (smoothing == Smoothing::none || i == 0) {
                return 0.0;
            }
            m += 1.0;
            t += 1.0;
        }
        log_sum += std::log(m / t) / 4.0;
    }
    double bp = s.hyp_len < s.ref_len
                    ? std::exp(1.0 - static_cast<double>(s.ref_len) / static_cast<double>(s.hyp_len))
                    : 1.0;
    return 100.0 * bp * std::exp(log_sum);
}

void require_same_length(std::size_t a, std::size_t b) {
    if (a != b) {
        fail(ErrorCode::LengthMismatch,
             fmt::format("{} hypotheses but {} references", a, b));
    }
}

}  // namespace

std::string_view to_string(Smoothing smoothing) {
    return smoothing == Smoothing::none ? "none" : "add_one";
}

Smoothing parse_smoothing(std::string_view text) {
    if (text == "none") return Smoothing::none;
    if (text == "add_one") return Smoothing::add_one;
    fail(ErrorCode::ConfigError, "unknown smoothing '" + std::string(text) + "'");
}

double bleu4(const std::vector<Tokens>& hypotheses, const std::vector<Tokens>& references,
             Smoothing smoothing) {
    require_same_length(hypotheses.size(), references.size());
    if (hypotheses.empty()) {
        fail(ErrorCode::EmptyCorpus, "BLEU needs at least one sentence pair");
    }
    BleuStats total;
    for (std::size_t i = 0; i < hypotheses.size(); ++i) {
        auto s = sentence_stats(hypotheses[i], references[i]);
        for (std::size_t n = 0; n < 4; ++n) {
            total.matches[n] += s.matches[n];
            total.totals[n] += s.totals[n];
        }
        total.hyp_len += s.hyp_len;
        total.ref_len += s.ref_len;
    }
    return bleu_from_stats(total, smoothing);
}

PRF rouge_n(const Tokens& hypothesis, const Tokens& reference, int n) {
    if (n < 1) {
        fail(ErrorCode::ValidationError, "rouge_n needs n >= 1");
    }
    auto size = static_cast<std::size_t>(n);
    auto [overlap, hyp_total] = clipped_overlap(hypothesis, reference, size);
    std::size_t ref_total = reference.size() >= size ? reference.size() - size + 1 : 0;
    return prf(static_cast<double>(overlap), static_cast<double>(hyp_total),
               static_cast<double>(ref_total));
}

std::size_t lcs_length(const Tokens& a, const Tokens& b) {
    std::vector<std::size_t> prev(b.size() + 1, 0);
    std::vector<std::size_t> cur(b.size() + 1, 0);
    for (const auto& x : a) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            cur[j] = x == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

PRF rouge_l(const Tokens& hypothesis, const Tokens& reference) {
    return prf(static_cast<double>(lcs_length(hypothesis, reference)),
               static_cast<double>(hypothesis.size()), static_cast<double>(reference.size()));
}

EvalReport evaluate_tokens(const std::vector<std::pair<Tokens, Tokens>>& pairs,
                           Smoothing smoothing, std::size_t max_concurrency) {
    if (pairs.empty()) {
        fail(ErrorCode::EmptyCorpus, "evaluation corpus is empty");
    }
    struct PerSample {
        BleuStats bleu;
        double r1 = 0, r2 = 0, rl = 0;
    };
    std::vector<PerSample> per(pairs.size());
    bounded_parallel_for(pairs.size(), max_concurrency, [&](std::size_t i) {
        const auto& [hyp, ref] = pairs[i];
        per[i].bleu = sentence_stats(hyp, ref);
        per[i].r1 = rouge_n(hyp, ref, 1).f1;
        per[i].r2 = rouge_n(hyp, ref, 2).f1;
        per[i].rl = rouge_l(hyp, ref).f1;
    });
    // Reduce in index order so sums are bit-stable regardless of threading.
    BleuStats total;
    EvalReport report;
    for (const auto& s : per) {
        for (std::size_t n = 0; n < 4; ++n) {
            total.matches[n] += s.bleu.matches[n];
            total.totals[n] += s.bleu.totals[n];
        }
        total.hyp_len += s.bleu.hyp_len;
        total.ref_len += s.bleu.ref_len;
        report.rouge1_f += s.r1;
        report.rouge2_f += s.r2;
        report.rougeL_f += s.rl;
    }
    auto n = static_cast<double>(pairs.size());
    report.rouge1_f /= n;
    report.rouge2_f /= n;
    report.rougeL_f /= n;
    report.bleu4 = bleu_from_stats(total, smoothing);
    report.sample_count = pairs.size();
    report.smoothing = smoothing;
    return report;
}

EvalReport evaluate_corpus(const std::vector<EvalSample>& samples, Smoothing smoothing,
                           std::size_t max_concurrency) {
    std::vector<std::pair<Tokens, Tokens>> pairs;
    pairs.reserve(samples.size());
    for (const auto& s : samples) {
        pairs.emplace_back(tokenize(s.hypothesis), tokenize(s.reference));
    }
    return evaluate_tokens(pairs, smoothing, max_concurrency);
}

std::string render_eval_table(const EvalReport& r) {
    return fmt::format(
        "| Metric | Value |\n"
        "|---|---|\n"
        "| BLEU-4 | {:.2f} |\n"
        "| ROUGE-1 | {:.2f} |\n"
        "| ROUGE-2 | {:.2f} |\n"
        "| ROUGE-L | {:.2f} |\n",
        r.bleu4, r.rouge1_f * 100.0, r.rouge2_f * 100.0, r.rougeL_f * 100.0);
}

std::vector<EvalSample> load_eval_samples(const std::filesystem::path& path) {
    std::vector<EvalSample> out;
    for (const auto& rec : read_jsonl(path)) {
        out.push_back({rec.value("id", std::string{}), rec.at("hypothesis").get<std::string>(),
                       rec.at("reference").get<std::string>()});
    }
    return out;
}

void to_json(Json& j, const EvalReport& r) {
    j = Json{{"bleu4", r.bleu4},
             {"rouge1_f", r.rouge1_f},
             {"rouge2_f", r.rouge2_f},
             {"rougeL_f", r.rougeL_f},
             {"sample_count", r.sample_count},
             {"smoothing", std::string(to_string(r.smoothing))}};
}

void from_json(const Json& j, EvalReport& r) {
    r.bleu4 = j.at("bleu4").get<double>();
    r.rouge1_f = j.at("rouge1_f").get<double>();
    r.rouge2_f = j.at("rouge2_f").get<double>();
    r.rougeL_f = j.at("rougeL_f").get<double>();
    r.sample_count = j.at("sample_count").get<std::size_t>();
    r.smoothing = parse_smoothing(j.at("smoothing").get<std::string>());
}

}  // namespace aquadapt
