#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "aquadapt/jsonl.hpp"

namespace aquadapt {

struct GoldStandard {
    std::vector<std::pair<std::string, int>> entries;  // pair_id, expert score
    std::string sample_policy;

    void validate() const;
};

struct JudgeRun {
    std::string judge_label;
    std::vector<std::pair<std::string, int>> scores;  // pair_id, judge score
};

struct RankCorrelations {
    double spearman_rho = 0.0;
    double kendall_tau = 0.0;
    double pearson_r = 0.0;
};

struct AgreementRates {
    double exact = 0.0;
    double off_by_1 = 0.0;
    double mae = 0.0;
};

enum class KappaWeights { linear, quadratic };
enum class StdConvention { population, sample };

struct Reliability {
    double pairwise_consistency = 0.0;
    double weighted_kappa = 0.0;
};

struct Calibration {
    double judge_mean = 0.0;
    double judge_std = 0.0;
    double gold_mean = 0.0;
    double gold_std = 0.0;
    double slope = 0.0;
};

struct JudgeReport {
    std::string judge_label;
    std::size_t sample_count = 0;
    double spearman_rho = 0.0;
    double kendall_tau = 0.0;
    double pearson_r = 0.0;
    double exact_match_rate = 0.0;
    double off_by_1_rate = 0.0;
    double mae = 0.0;
    double pairwise_consistency = 0.0;
    double weighted_kappa = 0.0;
    std::optional<double> weighted_kappa_quadratic;
    double judge_mean = 0.0;
    double judge_std = 0.0;
    double gold_mean = 0.0;
    double gold_std = 0.0;
    double regression_slope = 0.0;
};

struct BenchOptions {
    KappaWeights kappa_weights = KappaWeights::linear;
    bool report_quadratic_kappa = false;
    StdConvention std_convention = StdConvention::population;
};

/// Average (tie-aware) ranks, 1-based.
std::vector<double> average_ranks(std::span<const double> values);

/// Spearman on average ranks, Kendall tau-b, sample Pearson. Needs n >= 3 and
/// non-constant vectors.
RankCorrelations rank_correlations(std::span<const double> gold, std::span<const double> judge);

AgreementRates agreement_rates(std::span<const double> gold, std::span<const double> judge);

/// Over index pairs with distinct gold scores, the share where the judge
/// orders them the same way. Judge ties count as disagreement.
double pairwise_consistency(std::span<const double> gold, std::span<const double> judge);

/// Weighted Cohen's kappa over the categories 2..5.
double weighted_kappa(std::span<const double> gold, std::span<const double> judge,
                      KappaWeights weights = KappaWeights::linear);

Reliability reliability(std::span<const double> gold, std::span<const double> judge,
                        KappaWeights weights = KappaWeights::linear);

Calibration calibration(std::span<const double> gold, std::span<const double> judge,
                        StdConvention convention = StdConvention::population);

JudgeReport benchmark_judge(const GoldStandard& gold, const JudgeRun& run,
                            const BenchOptions& options = {});

/// Highest spearman_rho; ties go to lower mae, then higher pairwise
/// consistency, then the lexicographically smaller label.
std::string select_judge(std::span<const JudgeReport> reports);

/// Human-readable table with one column per judge, rows grouped as
/// Agreement / Reliability / Calibration / Regression.
std::string render_judge_table(std::span<const JudgeReport> reports);

GoldStandard load_gold_standard(const std::filesystem::path& path, std::string sample_policy = {});
JudgeRun load_judge_run(const std::filesystem::path& path, std::string judge_label);

void to_json(Json& j, const JudgeReport& report);
void from_json(const Json& j, JudgeReport& report);

}  // namespace aquadapt
