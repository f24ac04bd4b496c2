#include "support.hpp"

#include <cmath>

#include "aquadapt/evalnlg.hpp"
#include "aquadapt/tokenizer.hpp"
#include "oracles.hpp"

using namespace aquadapt;

namespace {

Tokens words(std::string_view s) { return tokenize(s); }

Tokens random_tokens(std::mt19937& rng, std::size_t vocab, std::size_t max_len) {
    Tokens t(1 + rng() % max_len);
    for (auto& w : t) w = "w" + std::to_string(rng() % vocab);
    return t;
}

}  // namespace

TEST_CASE("bleu extremes") {
    auto t = words("fish need dissolved oxygen to survive");
    CHECK(bleu4({t}, {t}) == doctest::Approx(100.0));
    CHECK(bleu4({words("a b c d")}, {words("e f g h")}, Smoothing::none) == 0.0);
    CHECK(bleu4({words("a b c d")}, {words("e f g h")}, Smoothing::add_one) == 0.0);
}

TEST_CASE("bleu with brevity penalty matches the reference") {
    Tokens h = words("the cat sat"), r = words("the cat sat on the mat");
    CHECK(std::fabs(bleu4({h}, {r}) - oracle::bleu4({h}, {r}, true)) < 1e-6);
    CHECK(bleu4({h}, {r}, Smoothing::none) == 0.0);
}

TEST_CASE("bleu errors") {
    CHECK_CODE(bleu4({words("a")}, {}), ErrorCode::LengthMismatch);
    CHECK_CODE(bleu4({}, {}), ErrorCode::EmptyCorpus);
    CHECK_CODE(bleu4({Tokens{}}, {words("a b")}), ErrorCode::EmptyHypothesis);
}

TEST_CASE("rouge-n examples") {
    auto r = rouge_n(words("fish need oxygen"), words("fish require dissolved oxygen"), 1);
    CHECK(r.precision == doctest::Approx(2.0 / 3.0));
    CHECK(r.recall == doctest::Approx(0.5));
    CHECK(r.f1 == doctest::Approx(4.0 / 7.0));
    auto same = rouge_n(words("a b c"), words("a b c"), 2);
    CHECK(same.f1 == doctest::Approx(1.0));
    auto tiny = rouge_n(words("a"), words("a b"), 2);
    CHECK(tiny.precision == 0.0);
    CHECK(tiny.recall == 0.0);
    CHECK(tiny.f1 == 0.0);
}

TEST_CASE("rouge-l examples") {
    auto r = rouge_l(words("a c e"), words("a b c d e"));
    CHECK(lcs_length(words("a c e"), words("a b c d e")) == 3);
    CHECK(r.precision == doctest::Approx(1.0));
    CHECK(r.recall == doctest::Approx(0.6));
    CHECK(r.f1 == doctest::Approx(0.75));
    CHECK(rouge_l(words("x y"), words("x y")).f1 == doctest::Approx(1.0));
    CHECK(rouge_l(words("x y"), words("p q")).f1 == 0.0);
}

TEST_CASE("identical corpus scores perfectly") {
    std::vector<EvalSample> s{{"1", "Aerate ponds at night.", "Aerate ponds at night."},
                              {"2", "Feed twice daily in summer.", "Feed twice daily in summer."}};
    auto r = evaluate_corpus(s);
    CHECK(r.bleu4 == doctest::Approx(100.0));
    CHECK(r.rouge1_f == doctest::Approx(1.0));
    CHECK(r.rouge2_f == doctest::Approx(1.0));
    CHECK(r.rougeL_f == doctest::Approx(1.0));
    CHECK(r.sample_count == 2);
}

TEST_CASE("random corpora match the reference implementation") {
    std::mt19937 rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<Tokens> hs, rs;
        std::vector<std::pair<Tokens, Tokens>> pairs;
        double r1 = 0, r2 = 0, rl = 0;
        for (int i = 0; i < 50; ++i) {
            auto h = random_tokens(rng, 8, 12), r = random_tokens(rng, 8, 12);
            hs.push_back(h);
            rs.push_back(r);
            pairs.emplace_back(h, r);
            r1 += oracle::rouge_n(h, r, 1).f;
            r2 += oracle::rouge_n(h, r, 2).f;
            rl += oracle::rouge_l(h, r).f;
        }
        auto rep = evaluate_tokens(pairs);
        CHECK(std::fabs(rep.bleu4 - oracle::bleu4(hs, rs, true)) < 1e-6);
        CHECK(std::fabs(bleu4(hs, rs, Smoothing::none) - oracle::bleu4(hs, rs, false)) < 1e-6);
        CHECK(std::fabs(rep.rouge1_f - r1 / 50) < 1e-6);
        CHECK(std::fabs(rep.rouge2_f - r2 / 50) < 1e-6);
        CHECK(std::fabs(rep.rougeL_f - rl / 50) < 1e-6);
        CHECK(rep.bleu4 >= 0);
        CHECK(rep.bleu4 <= 100);
    }
}

TEST_CASE("bleu ignores corpus order") {
    std::mt19937 rng(32);
    std::vector<Tokens> hs, rs;
    for (int i = 0; i < 30; ++i) {
        hs.push_back(random_tokens(rng, 6, 10));
        rs.push_back(random_tokens(rng, 6, 10));
    }
    double base = bleu4(hs, rs);
    std::vector<std::size_t> perm(30);
    std::iota(perm.begin(), perm.end(), 0);
    for (int t = 0; t < 10; ++t) {
        std::shuffle(perm.begin(), perm.end(), rng);
        std::vector<Tokens> hp, rp;
        for (auto i : perm) {
            hp.push_back(hs[i]);
            rp.push_back(rs[i]);
        }
        CHECK(bleu4(hp, rp) == doctest::Approx(base).epsilon(1e-12));
    }
}

TEST_CASE("swapping hypothesis and reference swaps precision and recall") {
    std::mt19937 rng(33);
    for (int t = 0; t < 100; ++t) {
        auto a = random_tokens(rng, 5, 10), b = random_tokens(rng, 5, 10);
        for (int n : {1, 2}) {
            auto x = rouge_n(a, b, n), y = rouge_n(b, a, n);
            CHECK(x.precision == doctest::Approx(y.recall));
            CHECK(x.recall == doctest::Approx(y.precision));
            CHECK(x.f1 == doctest::Approx(y.f1));
        }
        auto x = rouge_l(a, b), y = rouge_l(b, a);
        CHECK(x.precision == doctest::Approx(y.recall));
        CHECK(x.f1 == doctest::Approx(y.f1));
        CHECK(x.f1 >= 0);
        CHECK(x.f1 <= 1);
    }
}

TEST_CASE("lcs matches the recursive reference") {
    std::mt19937 rng(34);
    for (int t = 0; t < 300; ++t) {
        auto a = random_tokens(rng, 4, 14), b = random_tokens(rng, 4, 14);
        CHECK(lcs_length(a, b) == oracle::lcs(a, b));
    }
}

TEST_CASE("eval table and smoothing names") {
    EvalReport r;
    r.bleu4 = 49.19;
    r.rouge1_f = 0.5145;
    auto table = render_eval_table(r);
    CHECK(table.find("| BLEU-4 | 49.19 |") != std::string::npos);
    CHECK(table.find("| ROUGE-1 | 51.45 |") != std::string::npos);
    CHECK(parse_smoothing(to_string(Smoothing::none)) == Smoothing::none);
    CHECK_THROWS_AS(parse_smoothing("laplace"), Error);
}
