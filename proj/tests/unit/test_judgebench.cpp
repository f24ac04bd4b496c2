#include "support.hpp"

#include <algorithm>
#include <cmath>

#include "aquadapt/judgebench.hpp"
#include "oracles.hpp"

using namespace aquadapt;

namespace {

using V = std::vector<double>;

JudgeReport report(std::string label, double rho, double mae, double pc = 0.5) {
    JudgeReport r;
    r.judge_label = std::move(label);
    r.spearman_rho = rho;
    r.mae = mae;
    r.pairwise_consistency = pc;
    return r;
}

V random_scores(std::mt19937& rng, std::size_t n) {
    V v(n);
    for (auto& x : v) x = 2 + static_cast<double>(rng() % 4);
    return v;
}

bool degenerate(const V& v) { return std::all_of(v.begin(), v.end(), [&](double x) { return x == v[0]; }); }

}  // namespace

TEST_CASE("perfect agreement and reversal") {
    V g{2, 3, 4, 5};
    auto same = rank_correlations(g, g);
    CHECK(same.spearman_rho == doctest::Approx(1.0));
    CHECK(same.kendall_tau == doctest::Approx(1.0));
    CHECK(same.pearson_r == doctest::Approx(1.0));
    auto rev = rank_correlations(g, V{5, 4, 3, 2});
    CHECK(rev.spearman_rho == doctest::Approx(-1.0));
    CHECK(rev.kendall_tau == doctest::Approx(-1.0));
    CHECK(rev.pearson_r == doctest::Approx(-1.0));
}

TEST_CASE("one-off judge on four items") {
    V g{2, 3, 4, 5}, j{3, 3, 4, 5};
    auto c = rank_correlations(g, j);
    CHECK(c.pearson_r == doctest::Approx(3.5 / std::sqrt(5 * 2.75)).epsilon(1e-12));
    CHECK(std::fabs(c.pearson_r - 0.944) < 1e-3);
    CHECK(c.spearman_rho == doctest::Approx(oracle::spearman(g, j)).epsilon(1e-12));
    CHECK(c.kendall_tau == doctest::Approx(oracle::kendall_tau_b(g, j)).epsilon(1e-12));
    auto a = agreement_rates(g, j);
    CHECK(a.exact == 0.75);
    CHECK(a.off_by_1 == 1.0);
    CHECK(a.mae == 0.25);
}

TEST_CASE("agreement edge cases") {
    auto same = agreement_rates(V{2, 4, 5}, V{2, 4, 5});
    CHECK(same.exact == 1.0);
    CHECK(same.off_by_1 == 1.0);
    CHECK(same.mae == 0.0);
    auto worst = agreement_rates(V{2}, V{5});
    CHECK(worst.exact == 0.0);
    CHECK(worst.off_by_1 == 0.0);
    CHECK(worst.mae == 3.0);
    CHECK_CODE(agreement_rates(V{2, 3}, V{2}), ErrorCode::LengthMismatch);
}

TEST_CASE("degenerate correlation input") {
    CHECK_CODE(rank_correlations(V{4, 4, 4}, V{2, 3, 4}), ErrorCode::DegenerateInput);
    CHECK_CODE(rank_correlations(V{2, 3}, V{2, 3}), ErrorCode::DegenerateInput);
}

TEST_CASE("pairwise consistency and kappa") {
    CHECK(pairwise_consistency(V{2, 5}, V{5, 2}) == 0.0);
    CHECK(pairwise_consistency(V{2, 3, 4}, V{2, 4, 4}) == doctest::Approx(2.0 / 3.0));
    CHECK(weighted_kappa(V{2, 3, 5, 5}, V{2, 3, 5, 5}) == doctest::Approx(1.0));
    CHECK(weighted_kappa(V{2, 3, 5, 5}, V{2, 3, 5, 5}, KappaWeights::quadratic) == doctest::Approx(1.0));
}

TEST_CASE("calibration") {
    V g{2, 3, 3, 4};
    auto same = calibration(g, g);
    CHECK(same.slope == doctest::Approx(1.0));
    CHECK(same.judge_mean == same.gold_mean);
    CHECK(same.judge_std == same.gold_std);
    V shifted{3, 4, 4, 5};
    auto s = calibration(g, shifted);
    CHECK(s.slope == doctest::Approx(1.0));
    CHECK(s.judge_mean == doctest::Approx(s.gold_mean + 1));
    CHECK(s.gold_std == doctest::Approx(oracle::population_std(g)));
    auto sample = calibration(g, g, StdConvention::sample);
    CHECK(sample.gold_std == doctest::Approx(oracle::population_std(g) * std::sqrt(4.0 / 3.0)));
}

TEST_CASE("perfect judge report") {
    GoldStandard gold;
    JudgeRun run{"perfect", {}};
    for (int i = 0; i < 12; ++i) {
        gold.entries.emplace_back("p" + std::to_string(i), 2 + i % 4);
        run.scores.emplace_back("p" + std::to_string(i), 2 + i % 4);
    }
    auto r = benchmark_judge(gold, run);
    CHECK(r.spearman_rho == doctest::Approx(1.0));
    CHECK(r.kendall_tau == doctest::Approx(1.0));
    CHECK(r.pearson_r == doctest::Approx(1.0));
    CHECK(r.exact_match_rate == 1.0);
    CHECK(r.mae == 0.0);
    CHECK(r.weighted_kappa == doctest::Approx(1.0));
    CHECK(r.regression_slope == doctest::Approx(1.0));
    CHECK(r.sample_count == 12);
}

TEST_CASE("runs must cover the gold ids") {
    GoldStandard gold;
    gold.entries = {{"a", 2}, {"b", 3}, {"c", 4}};
    JudgeRun run{"j", {{"a", 2}, {"b", 3}}};
    CHECK_THROWS_AS(benchmark_judge(gold, run), Error);
    gold.entries.push_back({"d", 1});
    CHECK_THROWS_AS(gold.validate(), Error);
}

TEST_CASE("200 random vectors match the reference formulas") {
    std::mt19937 rng(2024);
    int checked = 0;
    while (checked < 200) {
        std::size_t n = 3 + rng() % 48;
        auto g = random_scores(rng, n);
        auto j = random_scores(rng, n);
        if (degenerate(g) || degenerate(j)) continue;
        ++checked;
        auto c = rank_correlations(g, j);
        CHECK(std::fabs(c.spearman_rho - oracle::spearman(g, j)) < 1e-9);
        CHECK(std::fabs(c.kendall_tau - oracle::kendall_tau_b(g, j)) < 1e-9);
        CHECK(std::fabs(c.pearson_r - oracle::pearson(g, j)) < 1e-9);
        auto a = agreement_rates(g, j);
        CHECK(std::fabs(a.exact - oracle::exact_rate(g, j)) < 1e-9);
        CHECK(std::fabs(a.off_by_1 - oracle::off_by_one_rate(g, j)) < 1e-9);
        CHECK(std::fabs(a.mae - oracle::mae(g, j)) < 1e-9);
        CHECK(a.exact <= a.off_by_1);
        CHECK((a.mae == 0) == (a.exact == 1));
        CHECK(std::fabs(pairwise_consistency(g, j) - oracle::pairwise_consistency(g, j)) < 1e-9);
        CHECK(std::fabs(weighted_kappa(g, j) - oracle::weighted_kappa(g, j)) < 1e-9);
        CHECK(std::fabs(weighted_kappa(g, j, KappaWeights::quadratic) - oracle::weighted_kappa(g, j, true)) < 1e-9);
        auto cal = calibration(g, j);
        CHECK(std::fabs(cal.judge_std - oracle::population_std(j)) < 1e-9);
        CHECK(std::fabs(cal.slope - oracle::ols_slope(g, j)) < 1e-9);
    }
}

TEST_CASE("metrics are invariant under a shared permutation") {
    std::mt19937 rng(11);
    for (int t = 0; t < 50; ++t) {
        auto g = random_scores(rng, 20);
        auto j = random_scores(rng, 20);
        if (degenerate(g) || degenerate(j)) continue;
        std::vector<std::size_t> perm(20);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        V gp, jp;
        for (auto i : perm) {
            gp.push_back(g[i]);
            jp.push_back(j[i]);
        }
        auto a = rank_correlations(g, j), b = rank_correlations(gp, jp);
        CHECK(a.spearman_rho == doctest::Approx(b.spearman_rho).epsilon(1e-12));
        CHECK(a.kendall_tau == doctest::Approx(b.kendall_tau).epsilon(1e-12));
        CHECK(a.pearson_r == doctest::Approx(b.pearson_r).epsilon(1e-12));
        CHECK(pairwise_consistency(g, j) == doctest::Approx(pairwise_consistency(gp, jp)));
        CHECK(weighted_kappa(g, j) == doctest::Approx(weighted_kappa(gp, jp)).epsilon(1e-12));
        CHECK(agreement_rates(g, j).mae == doctest::Approx(agreement_rates(gp, jp).mae));
    }
}

TEST_CASE("strictly monotone transforms preserve rho and pairwise consistency") {
    std::mt19937 rng(12);
    std::uniform_real_distribution<double> u(0, 10);
    for (int t = 0; t < 50; ++t) {
        V g(15), j(15);
        for (auto& x : g) x = std::round(u(rng));
        for (auto& x : j) x = u(rng);
        if (degenerate(g)) continue;
        V jt;
        for (double x : j) jt.push_back(std::exp(x / 3) + 7 * x);
        CHECK(rank_correlations(g, j).spearman_rho == rank_correlations(g, jt).spearman_rho);
        CHECK(pairwise_consistency(g, j) == pairwise_consistency(g, jt));
    }
}

TEST_CASE("average ranks") {
    CHECK(average_ranks(V{10, 20, 20, 30}) == V{1, 2.5, 2.5, 4});
}

TEST_CASE("judge selection and tie-breaks") {
    std::vector<JudgeReport> rs{report("a", 0.72, 0.68), report("b", 0.68, 0.73), report("c", 0.85, 0.42)};
    CHECK(select_judge(rs) == "c");
    std::vector<JudgeReport> one{report("only", 0.1, 1)};
    CHECK(select_judge(one) == "only");
    std::vector<JudgeReport> tie{report("x", 0.8, 0.5), report("y", 0.8, 0.4)};
    CHECK(select_judge(tie) == "y");
    std::vector<JudgeReport> full_tie{report("m", 0.8, 0.4, 0.9), report("k", 0.8, 0.4, 0.9),
                                      report("z", 0.8, 0.4, 0.7)};
    std::sort(full_tie.begin(), full_tie.end(), [](auto& l, auto& r) { return l.judge_label < r.judge_label; });
    do {
        CHECK(select_judge(full_tie) == "k");
    } while (std::next_permutation(full_tie.begin(), full_tie.end(),
                                   [](auto& l, auto& r) { return l.judge_label < r.judge_label; }));
    CHECK_THROWS_AS(select_judge(std::vector<JudgeReport>{}), Error);
}

TEST_CASE("table has one column per judge and the four groups") {
    std::vector<JudgeReport> rs{report("j1", 0.5, 0.5), report("j2", 0.6, 0.4)};
    auto table = render_judge_table(rs);
    CHECK(table.find("| Metric Type | Metric | j1 | j2 |") != std::string::npos);
    for (auto group : {"| Agreement |", "| Reliability |", "| Calibration |", "| Regression |"})
        CHECK(table.find(group) != std::string::npos);
}

TEST_CASE("report json round-trips") {
    auto r = report("j", 0.5, 0.25, 0.75);
    r.weighted_kappa_quadratic = 0.3;
    Json j = r;
    auto back = j.get<JudgeReport>();
    CHECK(back.judge_label == "j");
    CHECK(back.pairwise_consistency == 0.75);
    CHECK(back.weighted_kappa_quadratic == std::optional<double>(0.3));
}
