#include "support.hpp"

#include <algorithm>

#include "aquadapt/cleanup.hpp"

using namespace aquadapt;

namespace {

QAPair lit(std::string id, std::string q, std::string a) {
    QAPair p;
    p.id = std::move(id);
    p.category_id = "water-quality";
    p.question = std::move(q);
    p.answer = std::move(a);
    p.origin = Origin::literature;
    p.source_doc_id = "doc-1";
    return p;
}

const std::string kGood = "Dissolved oxygen falls at night because algae respire instead of photosynthesising.";

Bm25Index index() {
    return Bm25Index::build({{"d1", "oxygen ammonia pond aeration"}, {"d2", "feed pellet fish"}});
}

bool fired(const CleanupVerdict& v, std::string_view rule) {
    return std::find(v.fired_rules.begin(), v.fired_rules.end(), rule) != v.fired_rules.end();
}

std::vector<CleanupVerdict> run(const std::vector<QAPair>& pairs, const CleanupConfig& cfg = {}) {
    return run_rules(pairs, index(), AquaQuery{{"oxygen", "ammonia"}}, cfg);
}

}  // namespace

TEST_CASE("second identical pair is an exact duplicate") {
    auto v = run({lit("a", "Why does oxygen drop?", kGood), lit("b", "Why does oxygen drop?", kGood)});
    CHECK(v[0].kept);
    CHECK(v[1].fired_rules == std::vector<std::string>{"exact_duplicate"});
}

TEST_CASE("short answers fire too_short") {
    auto v = run({lit("a", "Is oxygen needed?", "Yes.")});
    CHECK(fired(v[0], cleanup_rule::too_short));
    CHECK_FALSE(v[0].kept);
}

TEST_CASE("imperative lead counts as a question") {
    auto v = run({lit("a", "Explain dissolved oxygen dynamics", kGood)});
    CHECK(v[0].kept);
    auto bad = run({lit("a", "Dissolved oxygen dynamics", kGood)});
    CHECK(fired(bad[0], cleanup_rule::malformed_question));
}

TEST_CASE("other rules") {
    CleanupConfig cfg;
    cfg.max_answer_tokens = 12;
    cfg.relevance_floor = 0.1;
    std::string long_answer = "Oxygen " + std::string(200, 'x') + " a b c d e f g h i j k l m n o p.";
    auto v = run({lit("a", "What limits oxygen?", "Oxygen matters for fish because the"),
                  lit("b", "What is oxygen?", long_answer),
                  lit("c", "What is bread made from?", "Bread is made from flour, water, salt and yeast in ovens."),
                  lit("d", "What is good?", "It depends. Consult an expert.")},
                 cfg);
    CHECK(fired(v[0], cleanup_rule::incomplete_answer));
    CHECK(fired(v[1], cleanup_rule::too_long));
    CHECK(fired(v[2], cleanup_rule::off_topic));
    CHECK(fired(v[3], cleanup_rule::generic_phrase));
}

TEST_CASE("near duplicates by shingle overlap") {
    std::string a = "Dissolved oxygen falls at night because algae respire instead of photosynthesising in the pond.";
    std::string b = "Dissolved oxygen falls at night because algae respire instead of photosynthesising in the pond today.";
    auto v = run({lit("a", "Why does oxygen fall at night?", a), lit("b", "Why does oxygen fall at night?", b)});
    CHECK(v[0].kept);
    CHECK(fired(v[1], cleanup_rule::near_duplicate));
    std::vector<std::string> x{"a", "b", "c", "d"};
    CHECK(shingle_overlap(x, x, 3) == 1.0);
    CHECK(shingle_overlap(x, {"e", "f", "g"}, 3) == 0.0);
}

TEST_CASE("expert pairs bypass cleanup") {
    auto p = lit("a", "oxygen", "Yes");
    p.origin = Origin::expert_synthetic;
    p.source_doc_id.reset();
    auto v = run({p});
    CHECK(v[0].kept);
    CHECK(v[0].fired_rules.empty());
}

TEST_CASE("kept iff nothing fired, and one survivor per duplicate class under permutation") {
    std::vector<QAPair> batch;
    const char* answers[] = {"Aeration raises oxygen levels in ponds during warm nights reliably.",
                             "Ammonia becomes more toxic as pH and temperature both rise sharply.",
                             "Short.", "Biofilters convert ammonia into nitrite and then nitrate over time."};
    for (int i = 0; i < 16; ++i)
        batch.push_back(lit("p" + std::to_string(10 + i), "How does oxygen change?", answers[i % 4]));
    std::mt19937 rng(5);
    for (int t = 0; t < 20; ++t) {
        std::shuffle(batch.begin(), batch.end(), rng);
        auto v = run(batch);
        std::map<std::string, int> survivors;
        for (std::size_t i = 0; i < v.size(); ++i) {
            CHECK(v[i].kept == v[i].fired_rules.empty());
            if (!fired(v[i], cleanup_rule::exact_duplicate) && !fired(v[i], cleanup_rule::near_duplicate))
                survivors[batch[i].answer]++;
        }
        for (const auto& [answer, n] : survivors) CHECK(n == 1);
        CHECK(survivors.size() == 4);
    }
}

TEST_CASE("loosening a numeric bound never shrinks the kept set") {
    std::vector<QAPair> batch;
    std::mt19937 rng(8);
    for (int i = 0; i < 40; ++i) {
        std::string a;
        int n = 1 + static_cast<int>(rng() % 20);
        for (int w = 0; w < n; ++w) a += "oxygen" + std::to_string(rng() % 50) + " ";
        a += "end.";
        batch.push_back(lit("p" + std::to_string(i), "What about oxygen?", a));
    }
    auto kept = [&](const CleanupConfig& cfg) {
        std::set<std::string> s;
        auto v = run(batch, cfg);
        for (std::size_t i = 0; i < v.size(); ++i)
            if (v[i].kept) s.insert(batch[i].id);
        return s;
    };
    CleanupConfig tight;
    tight.min_answer_tokens = 12;
    tight.max_answer_tokens = 15;
    auto base = kept(tight);
    auto looser_min = tight;
    looser_min.min_answer_tokens = 4;
    auto looser_max = tight;
    looser_max.max_answer_tokens = 40;
    for (const auto& cfg : {looser_min, looser_max}) {
        auto s = kept(cfg);
        CHECK(std::includes(s.begin(), s.end(), base.begin(), base.end()));
    }
}

TEST_CASE("advisory judge drops do not remove pairs unless binding") {
    CleanupConfig cfg;
    GeneratorRef judge;
    judge.rng_seed = 1;
    cfg.judge_assist = judge;
    MockBackend gate(1, BackendRole::gate, "gate");
    std::vector<QAPair> batch;
    for (int i = 0; i < 24; ++i)
        batch.push_back(lit("p" + std::to_string(i), "What sets oxygen " + std::to_string(i) + "?",
                            "Oxygen level " + std::to_string(i) + " depends on aeration, temperature and stocking."));
    auto advisory = run_rules(batch, index(), AquaQuery{{"oxygen"}}, cfg, &gate);
    std::size_t advisories = 0;
    for (const auto& v : advisory) {
        CHECK(v.kept);
        advisories += v.advisories.size();
    }
    CHECK(advisories > 0);
    cfg.judge_binding = true;
    auto binding = run_rules(batch, index(), AquaQuery{{"oxygen"}}, cfg, &gate);
    std::size_t dropped = 0;
    for (const auto& v : binding) dropped += fired(v, cleanup_rule::judge_drop);
    CHECK(dropped == advisories);
}

TEST_CASE("config validation") {
    CleanupConfig cfg;
    cfg.min_answer_tokens = 600;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = {};
    cfg.near_dup_threshold = 1.5;
    CHECK_THROWS_AS(cfg.validate(), Error);
}
