#include "aquadapt/judgebench.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <set>

#include "aquadapt/error.hpp"
#include "aquadapt/types.hpp"

namespace aquadapt {

namespace {

void require_same_length(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        fail(ErrorCode::LengthMismatch,
             fmt::format("gold has {} scores but judge has {}", a.size(), b.size()));
    }
}

void require_min_length(std::span<const double> a, std::size_t n, std::string_view what) {
    if (a.size() < n) {
        fail(ErrorCode::DegenerateInput,
             fmt::format("{} needs at least {} scores (got {})", what, n, a.size()));
    }
}

double mean(std::span<const double> v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Sum of squared deviations / co-deviations.
double co_deviation(std::span<const double> a, std::span<const double> b) {
    double ma = mean(a);
    double mb = mean(b);
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sum += (a[i] - ma) * (b[i] - mb);
    }
    return sum;
}

double pearson(std::span<const double> a, std::span<const double> b) {
    double saa = co_deviation(a, a);
    double sbb = co_deviation(b, b);
    if (saa <= 0.0 || sbb <= 0.0) {
        fail(ErrorCode::DegenerateInput, "correlation is undefined for a constant score vector");
    }
    return co_deviation(a, b) / std::sqrt(saa * sbb);
}

int sign(double x) { return (x > 0.0) - (x < 0.0); }

int category_index(double score) {
    if (score != std::floor(score) || !is_valid_score(static_cast<int>(score))) {
        fail(ErrorCode::IllegalScore,
             fmt::format("kappa needs integer scores in 2..5 (got {})", score));
    }
    return static_cast<int>(score) - kMinScore;
}

std::vector<double> as_doubles(const std::vector<int>& values) {
    return {values.begin(), values.end()};
}

}  // namespace

void GoldStandard::validate() const {
    std::set<std::string> ids;
    for (const auto& [id, score] : entries) {
        if (!ids.insert(id).second) {
            fail(ErrorCode::ValidationError, "gold standard repeats pair '" + id + "'");
        }
        if (!is_valid_score(score)) {
            fail(ErrorCode::IllegalScore,
                 fmt::format("gold score {} for '{}' is outside 2..5", score, id));
        }
    }
}

std::vector<double> average_ranks(std::span<const double> values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(values.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) {
            ++j;
        }
        double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) {
            ranks[order[k]] = rank;
        }
        i = j + 1;
    }
    return ranks;
}

RankCorrelations rank_correlations(std::span<const double> gold, std::span<const double> judge) {
    require_same_length(gold, judge);
    require_min_length(gold, 3, "rank correlation");
    RankCorrelations out;
    out.pearson_r = pearson(gold, judge);
    auto gold_ranks = average_ranks(gold);
    auto judge_ranks = average_ranks(judge);
    out.spearman_rho = pearson(gold_ranks, judge_ranks);

    double concordant = 0.0;
    double discordant = 0.0;
    double tied_gold = 0.0;
    double tied_judge = 0.0;
    const std::size_t n = gold.size();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            int s = sign(gold[i] - gold[j]) * sign(judge[i] - judge[j]);
            if (s > 0) concordant += 1.0;
            if (s < 0) discordant += 1.0;
            if (gold[i] == gold[j]) tied_gold += 1.0;
            if (judge[i] == judge[j]) tied_judge += 1.0;
        }
    }
    double total = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
    out.kendall_tau = (concordant - discordant) /
                      std::sqrt((total - tied_gold) * (total - tied_judge));
    return out;
}

AgreementRates agreement_rates(std::span<const double> gold, std::span<const double> judge) {
    require_same_length(gold, judge);
    if (gold.empty()) {
        fail(ErrorCode::DegenerateInput, "agreement rates need at least one score");
    }
    AgreementRates out;
    for (std::size_t i = 0; i < gold.size(); ++i) {
        double diff = std::abs(gold[i] - judge[i]);
        out.exact += diff == 0.0 ? 1.0 : 0.0;
        out.off_by_1 += diff <= 1.0 ? 1.0 : 0.0;
        out.mae += diff;
    }
    auto n = static_cast<double>(gold.size());
    out.exact /= n;
    out.off_by_1 /= n;
    out.mae /= n;
    return out;
}

double pairwise_consistency(std::span<const double> gold, std::span<const double> judge) {
    require_same_length(gold, judge);
    double compared = 0.0;
    double agreed = 0.0;
    for (std::size_t i = 0; i < gold.size(); ++i) {
        for (std::size_t j = i + 1; j < gold.size(); ++j) {
            int g = sign(gold[i] - gold[j]);
            if (g == 0) {
                continue;
            }
            compared += 1.0;
            agreed += sign(judge[i] - judge[j]) == g ? 1.0 : 0.0;
        }
    }
    if (compared == 0.0) {
        fail(ErrorCode::DegenerateInput, "pairwise consistency needs two distinct gold scores");
    }
    return agreed / compared;
}

double weighted_kappa(std::span<const double> gold, std::span<const double> judge,
                      KappaWeights weights) {
    require_same_length(gold, judge);
    require_min_length(gold, 2, "weighted kappa");
    constexpr int kCategories = kMaxScore - kMinScore + 1;
    std::array<std::array<double, kCategories>, kCategories> observed{};
    std::array<double, kCategories> gold_margin{};
    std::array<double, kCategories> judge_margin{};
    auto n = static_cast<double>(gold.size());
    for (std::size_t i = 0; i < gold.size(); ++i) {
        int g = category_index(gold[i]);
        int j = category_index(judge[i]);
        observed[g][j] += 1.0 / n;
        gold_margin[g] += 1.0 / n;
        judge_margin[j] += 1.0 / n;
    }
    double weighted_observed = 0.0;
    double weighted_expected = 0.0;
    for (int a = 0; a < kCategories; ++a) {
        for (int b = 0; b < kCategories; ++b) {
            double w = std::abs(a - b) / static_cast<double>(kCategories - 1);
            if (weights == KappaWeights::quadratic) {
                w *= w;
            }
            weighted_observed += w * observed[a][b];
            weighted_expected += w * gold_margin[a] * judge_margin[b];
        }
    }
    if (weighted_expected == 0.0) {
        fail(ErrorCode::DegenerateInput, "kappa is undefined when both raters use one category");
    }
    return 1.0 - weighted_observed / weighted_expected;
}

Reliability reliability(std::span<const double> gold, std::span<const double> judge,
                        KappaWeights weights) {
    require_same_length(gold, judge);
    require_min_length(gold, 2, "reliability");
    return {pairwise_consistency(gold, judge), weighted_kappa(gold, judge, weights)};
}

Calibration calibration(std::span<const double> gold, std::span<const double> judge,
                        StdConvention convention) {
    require_same_length(gold, judge);
    require_min_length(gold, 2, "calibration");
    auto n = static_cast<double>(gold.size());
    double divisor = convention == StdConvention::population ? n : n - 1.0;
    Calibration out;
    out.gold_mean = mean(gold);
    out.judge_mean = mean(judge);
    double gold_ss = co_deviation(gold, gold);
    out.gold_std = std::sqrt(gold_ss / divisor);
    out.judge_std = std::sqrt(co_deviation(judge, judge) / divisor);
    if (gold_ss <= 0.0) {
        fail(ErrorCode::DegenerateInput, "slope is undefined for constant gold scores");
    }
    out.slope = co_deviation(gold, judge) / gold_ss;
    return out;
}

JudgeReport benchmark_judge(const GoldStandard& gold, const JudgeRun& run,
                            const BenchOptions& options) {
    gold.validate();
    std::map<std::string, int> by_id;
    for (const auto& [id, score] : run.scores) {
        if (!is_valid_score(score)) {
            fail(ErrorCode::IllegalScore,
                 fmt::format("judge '{}' scored '{}' {}, outside 2..5", run.judge_label, id, score));
        }
        by_id[id] = score;
    }
    std::vector<int> gold_scores;
    std::vector<int> judge_scores;
    for (const auto& [id, score] : gold.entries) {
        auto it = by_id.find(id);
        if (it == by_id.end()) {
            fail(ErrorCode::ValidationError,
                 fmt::format("judge '{}' has no score for gold pair '{}'", run.judge_label, id));
        }
        gold_scores.push_back(score);
        judge_scores.push_back(it->second);
    }
    auto g = as_doubles(gold_scores);
    auto j = as_doubles(judge_scores);

    JudgeReport report;
    report.judge_label = run.judge_label;
    report.sample_count = g.size();
    auto corr = rank_correlations(g, j);
    report.spearman_rho = corr.spearman_rho;
    report.kendall_tau = corr.kendall_tau;
    report.pearson_r = corr.pearson_r;
    auto rates = agreement_rates(g, j);
    report.exact_match_rate = rates.exact;
    report.off_by_1_rate = rates.off_by_1;
    report.mae = rates.mae;
    auto rel = reliability(g, j, options.kappa_weights);
    report.pairwise_consistency = rel.pairwise_consistency;
    report.weighted_kappa = rel.weighted_kappa;
    if (options.report_quadratic_kappa) {
        report.weighted_kappa_quadratic = weighted_kappa(g, j, KappaWeights::quadratic);
    }
    auto cal = calibration(g, j, options.std_convention);
    report.judge_mean = cal.judge_mean;
    report.judge_std = cal.judge_std;
    report.gold_mean = cal.gold_mean;
    report.gold_std = cal.gold_std;
    report.regression_slope = cal.slope;
    return report;
}

std::string select_judge(std::span<const JudgeReport> reports) {
    if (reports.empty()) {
        fail(ErrorCode::ValidationError, "select_judge needs at least one report");
    }
    auto better = [](const JudgeReport& a, const JudgeReport& b) {
        if (a.spearman_rho != b.spearman_rho) return a.spearman_rho > b.spearman_rho;
        if (a.mae != b.mae) return a.mae < b.mae;
        if (a.pairwise_consistency != b.pairwise_consistency)
            return a.pairwise_consistency > b.pairwise_consistency;
        return a.judge_label < b.judge_label;
    };
    const JudgeReport* best = &reports.front();
    for (const auto& report : reports) {
        if (better(report, *best)) {
            best = &report;
        }
    }
    return best->judge_label;
}

std::string render_judge_table(std::span<const JudgeReport> reports) {
    if (reports.empty()) {
        return {};
    }
    auto fixed = [](double v) { return fmt::format("{:.2f}", v); };
    auto percent = [](double v) { return fmt::format("{:.1f}%", v * 100.0); };
    auto approx = [](double v) { return fmt::format("~{:.2f}", v); };

    struct Row {
        std::string type;
        std::string metric;
        std::function<std::string(const JudgeReport&)> cell;
    };
    const auto& first = reports.front();
    std::vector<Row> rows = {
        {"Agreement", "Spearman’s ρ (rank)", [&](const JudgeReport& r) { return fixed(r.spearman_rho); }},
        {"", "Kendall’s τ (ordinal)", [&](const JudgeReport& r) { return fixed(r.kendall_tau); }},
        {"", "Pearson correlation (linear)", [&](const JudgeReport& r) { return fixed(r.pearson_r); }},
        {"", "Exact match rate", [&](const JudgeReport& r) { return percent(r.exact_match_rate); }},
        {"", "Off-by-1 match rate", [&](const JudgeReport& r) { return percent(r.off_by_1_rate); }},
        {"", "Mean Absolute Error (MAE)", [&](const JudgeReport& r) { return fixed(r.mae); }},
        {"Reliability", "Pairwise consistency",
         [&](const JudgeReport& r) { return percent(r.pairwise_consistency); }},
        {"", "Weighted Cohen’s κ", [&](const JudgeReport& r) { return fixed(r.weighted_kappa); }},
        {"Calibration", fmt::format("Mean score (vs expert {:.2f})", first.gold_mean),
         [&](const JudgeReport& r) { return fixed(r.judge_mean); }},
        {"", fmt::format("Std dev (vs expert {:.2f})", first.gold_std),
         [&](const JudgeReport& r) { return fixed(r.judge_std); }},
        {"Regression", "Slope vs expert scale",
         [&](const JudgeReport& r) { return approx(r.regression_slope); }},
    };
    std::string out = "| Metric Type | Metric |";
    for (const auto& r : reports) {
        out += " " + r.judge_label + " |";
    }
    out += "\n|---|---|";
    for (std::size_t i = 0; i < reports.size(); ++i) {
        out += "---|";
    }
    out += "\n";
    for (const auto& row : rows) {
        out += "| " + row.type + " | " + row.metric + " |";
        for (const auto& r : reports) {
            out += " " + row.cell(r) + " |";
        }
        out += "\n";
    }
    return out;
}

namespace {

std::vector<std::pair<std::string, int>> load_scores(const std::filesystem::path& path) {
    std::vector<std::pair<std::string, int>> out;
    for (const auto& record : read_jsonl(path)) {
        const auto& score = record.at("score");
        if (!score.is_number_integer()) {
            fail(ErrorCode::IllegalScore, path.string() + ": scores must be integers");
        }
        out.emplace_back(record.at("pair_id").get<std::string>(), score.get<int>());
    }
    return out;
}

}  // namespace

GoldStandard load_gold_standard(const std::filesystem::path& path, std::string sample_policy) {
    GoldStandard gold;
    gold.entries = load_scores(path);
    gold.sample_policy = std::move(sample_policy);
    gold.validate();
    return gold;
}

JudgeRun load_judge_run(const std::filesystem::path& path, std::string judge_label) {
    return {std::move(judge_label), load_scores(path)};
}

void to_json(Json& j, const JudgeReport& report) {
    j = Json{{"judge_label", report.judge_label},
             {"sample_count", report.sample_count},
             {"spearman_rho", report.spearman_rho},
             {"kendall_tau", report.kendall_tau},
             {"pearson_r", report.pearson_r},
             {"exact_match_rate", report.exact_match_rate},
             {"off_by_1_rate", report.off_by_1_rate},
             {"mae", report.mae},
             {"pairwise_consistency", report.pairwise_consistency},
             {"weighted_kappa", report.weighted_kappa},
             {"judge_mean", report.judge_mean},
             {"judge_std", report.judge_std},
             {"gold_mean", report.gold_mean},
             {"gold_std", report.gold_std},
             {"regression_slope", report.regression_slope}};
    if (report.weighted_kappa_quadratic) {
        j["weighted_kappa_quadratic"] = *report.weighted_kappa_quadratic;
    }
}

void from_json(const Json& j, JudgeReport& report) {
    report.judge_label = j.at("judge_label").get<std::string>();
    report.sample_count = j.value("sample_count", std::size_t{0});
    report.spearman_rho = j.at("spearman_rho").get<double>();
    report.kendall_tau = j.at("kendall_tau").get<double>();
    report.pearson_r = j.at("pearson_r").get<double>();
    report.exact_match_rate = j.at("exact_match_rate").get<double>();
    report.off_by_1_rate = j.at("off_by_1_rate").get<double>();
    report.mae = j.at("mae").get<double>();
    report.pairwise_consistency = j.at("pairwise_consistency").get<double>();
    report.weighted_kappa = j.at("weighted_kappa").get<double>();
    if (j.contains("weighted_kappa_quadratic")) {
        report.weighted_kappa_quadratic = j.at("weighted_kappa_quadratic").get<double>();
    }
    report.judge_mean = j.at("judge_mean").get<double>();
    report.judge_std = j.at("judge_std").get<double>();
    report.gold_mean = j.at("gold_mean").get<double>();
    report.gold_std = j.at("gold_std").get<double>();
    report.regression_slope = j.at("regression_slope").get<double>();
}

}  // namespace aquadapt
