#include "aquadapt/genkit.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "aquadapt/dispatch.hpp"
#include "aquadapt/error.hpp"
#include "aquadapt/hashing.hpp"
#include "aquadapt/tokenizer.hpp"

namespace aquadapt {

namespace {

constexpr std::string_view kQuestionForms[] = {
    "What is the role of {a} in {b}?",
    "How does {a} affect {b} on a working farm?",
    "Why should farm operators monitor {a} when managing {b}?",
    "Explain how {a} relates to {b}.",
    "Which practical steps connect {a} with {b}?",
    "Describe the main risks when {a} and {b} are poorly managed.",
};

constexpr std::string_view kAnswerForms[] = {
    "{A} shapes {b} through several practical mechanisms, so operators should record {a} "
    "regularly and adjust {b} routines when readings drift.",
    "Careful control of {a} keeps {b} within safe limits; sudden changes in {a} usually "
    "show up in {b} within days, which gives time to intervene.",
    "Farmers should treat {a} as an early indicator for {b}, checking it on a fixed schedule "
    "and keeping written records to spot seasonal trends.",
    "{A} and {b} interact closely, and a stable routine for both reduces stress on the stock "
    "while improving growth and survival.",
    "Good records of {a} help explain changes in {b}, and comparing them across seasons shows "
    "which management steps actually work.",
    "When {a} is neglected, problems with {b} tend to follow, so extension staff advise "
    "checking {a} before any change to {b}.",
    // Deliberately defective replies, so downstream filters see realistic noise.
    "It depends on {b}.",
    "{A} matters for {b} because the",
};

std::string substitute(std::string_view form, const std::string& a, const std::string& b) {
    std::string capital = a;
    if (!capital.empty() && capital[0] >= 'a' && capital[0] <= 'z') {
        capital[0] = static_cast<char>(capital[0] - 'a' + 'A');
    }
    std::string out;
    for (std::size_t i = 0; i < form.size(); ++i) {
        if (form.compare(i, 3, "{a}") == 0) {
            out += a, i += 2;
        } else if (form.compare(i, 3, "{A}") == 0) {
            out += capital, i += 2;
        } else if (form.compare(i, 3, "{b}") == 0) {
            out += b, i += 2;
        } else {
            out.push_back(form[i]);
        }
    }
    return out;
}

std::vector<std::string> content_words(std::string_view prompt) {
    std::vector<std::string> words;
    std::set<std::string> seen;
    for (auto& token : word_tokens(prompt)) {
        bool alphabetic = std::all_of(token.begin(), token.end(),
                                      [](char c) { return c >= 'a' && c <= 'z'; });
        if (alphabetic && token.size() >= 4 && stop_words().count(token) == 0 &&
            seen.insert(token).second) {
            words.push_back(std::move(token));
        }
    }
    if (words.size() < 2) {
        words = {"aquaculture", "water", "fish", "feed"};
    }
    return words;
}

}  // namespace

void GeneratorRef::validate() const {
    if (kind == BackendKind::mock && !rng_seed) {
        fail(ErrorCode::ConfigError, fmt::format("mock backend '{}' needs rng_seed", model_label));
    }
    if (kind == BackendKind::external && endpoint.empty()) {
        fail(ErrorCode::ConfigError,
             fmt::format("external backend '{}' needs an endpoint", model_label));
    }
    if (max_concurrency == 0) {
        fail(ErrorCode::ConfigError, "max_concurrency must be >= 1");
    }
}

MockBackend::MockBackend(std::uint64_t seed, BackendRole role, std::string label)
    : seed_(seed), role_(role), label_(std::move(label)) {}

std::string MockBackend::generate(const BackendRequest& request) const {
    auto words = content_words(request.prompt);
    SeededRng rng(splitmix64(fnv1a64(request.prompt) ^ splitmix64(seed_)) +
                  static_cast<std::uint64_t>(request.pair_count));
    std::vector<std::pair<std::string, std::string>> pairs;
    for (int i = 0; i < request.pair_count; ++i) {
        auto a_index = rng.below(words.size());
        auto b_index = rng.below(words.size() - 1);
        if (b_index >= a_index) {
            ++b_index;
        }
        const auto& a = words[a_index];
        const auto& b = words[b_index];
        auto question = substitute(kQuestionForms[rng.below(std::size(kQuestionForms))], a, b);
        auto answer = substitute(kAnswerForms[rng.below(std::size(kAnswerForms))], a, b);
        pairs.emplace_back(std::move(question), std::move(answer));
    }
    return render_qa_reply(pairs);
}

std::string MockBackend::complete(const BackendRequest& request) {
    if (role_ == BackendRole::generator) {
        return generate(request);
    }
    auto marker = request.prompt.rfind(kCandidateMarker);
    std::string_view candidate = request.prompt;
    if (marker != std::string::npos) {
        candidate = candidate.substr(marker + kCandidateMarker.size());
    }
    auto draw = splitmix64(fnv1a64(candidate) ^ splitmix64(seed_));
    if (role_ == BackendRole::judge) {
        return std::to_string(kMinScore + static_cast<int>(draw % 4));
    }
    return draw % 8 == 0 ? "drop" : "keep";
}

std::unique_ptr<TextBackend> make_backend(const GeneratorRef& ref, BackendRole role,
                                          std::optional<std::filesystem::path> audit_log) {
    ref.validate();
    if (ref.kind == BackendKind::mock) {
        return std::make_unique<MockBackend>(*ref.rng_seed, role, ref.model_label);
    }
    return std::make_unique<HttpBackend>(ref, std::move(audit_log));
}

std::string IdSequence::next() {
    return fmt::format("{}-{:06d}", prefix_, ++counter_);
}

std::optional<std::uint64_t> IdSequence::parse(std::string_view id) const {
    if (id.size() <= prefix_.size() + 1 || id.substr(0, prefix_.size()) != prefix_ ||
        id[prefix_.size()] != '-') {
        return std::nullopt;
    }
    std::uint64_t value = 0;
    for (char c : id.substr(prefix_.size() + 1)) {
        if (c < '0' || c > '9') {
            return std::nullopt;
        }
        value = value * 10 + static_cast<std::uint64_t>(c - '0');
    }
    return value;
}

void GenerationRequest::validate() const {
    if (n < 1) {
        fail(ErrorCode::ValidationError, "generation request needs n >= 1");
    }
    if (category_id.empty()) {
        fail(ErrorCode::ValidationError, "generation request needs a category_id");
    }
}

std::string assemble_prompt(const PromptTemplate& tmpl, std::string_view category_name,
                            const std::vector<SeedPair>& seeds, int k,
                            std::optional<std::string_view> document) {
    if (k < 1 || static_cast<std::size_t>(k) > seeds.size()) {
        fail(ErrorCode::NotEnoughSeeds,
             fmt::format("asked for {} exemplars but {} seeds are available", k, seeds.size()));
    }
    std::vector<std::string> blocks;
    if (!tmpl.system_text.empty()) {
        blocks.push_back(tmpl.system_text);
    }
    for (int i = 0; i < k; ++i) {
        blocks.push_back("Q: " + seeds[i].question + "\nA: " + seeds[i].answer);
    }
    std::string instruction = tmpl.instruction_text;
    auto pos = instruction.find(kCategoryPlaceholder);
    if (pos != std::string::npos) {
        instruction.replace(pos, kCategoryPlaceholder.size(), category_name);
    }
    blocks.push_back(std::move(instruction));
    if (document) {
        blocks.emplace_back(*document);
    }
    std::string prompt;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        if (i > 0) {
            prompt += "\n\n";
        }
        prompt += blocks[i];
    }
    return prompt;
}

std::vector<std::pair<std::string, std::string>> parse_qa_reply(std::string_view reply,
                                                                int expected) {
    std::vector<std::pair<std::string, std::string>> pairs;
    enum class Field { none, question, answer } field = Field::none;
    std::string question;
    std::string answer;
    auto malformed = [&](const std::string& why) -> void {
        throw MalformedReplyError("malformed backend reply: " + why, std::string(reply));
    };
    auto finish_pair = [&] {
        if (trim(question).empty() || trim(answer).empty()) {
            malformed(fmt::format("pair {} has an empty question or answer", pairs.size() + 1));
        }
        pairs.emplace_back(std::string(trim(question)), std::string(trim(answer)));
        question.clear();
        answer.clear();
    };
    std::size_t start = 0;
    while (start <= reply.size()) {
        auto end = reply.find('\n', start);
        if (end == std::string_view::npos) {
            end = reply.size();
        }
        auto line = trim(reply.substr(start, end - start));
        start = end + 1;
        if (line.empty()) {
            continue;
        }
        if (line.substr(0, 2) == "Q:") {
            if (field == Field::question) {
                malformed("question without an answer");
            }
            if (field == Field::answer) {
                finish_pair();
            }
            field = Field::question;
            question = std::string(trim(line.substr(2)));
        } else if (line.substr(0, 2) == "A:") {
            if (field != Field::question) {
                malformed("answer without a preceding question");
            }
            field = Field::answer;
            answer = std::string(trim(line.substr(2)));
        } else if (field == Field::question) {
            question += " " + std::string(line);
        } else if (field == Field::answer) {
            answer += " " + std::string(line);
        } else {
            malformed("text before the first 'Q:' block");
        }
    }
    if (field == Field::question) {
        malformed("question without an answer");
    }
    if (field == Field::answer) {
        finish_pair();
    }
    if (pairs.empty()) {
        malformed("no Q:/A: blocks found");
    }
    if (expected > 0 && static_cast<int>(pairs.size()) != expected) {
        malformed(fmt::format("expected {} pairs, got {}", expected, pairs.size()));
    }
    return pairs;
}

std::string render_qa_reply(const std::vector<std::pair<std::string, std::string>>& pairs) {
    std::string out;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        if (i > 0) {
            out += "\n";
        }
        out += "Q: " + pairs[i].first + "\nA: " + pairs[i].second + "\n";
    }
    return out;
}

std::string completion_prompt(const GenerationRequest& request) {
    return request.prompt +
           fmt::format("\n\nReturn exactly {} question-answer pair{} as alternating lines "
                       "starting with \"Q:\" and \"A:\".",
                       request.n, request.n == 1 ? "" : "s");
}

namespace {

std::vector<QAPair> build_pairs(const std::vector<std::pair<std::string, std::string>>& parsed,
                                const GenerationRequest& req, IdSequence& ids,
                                const QAPair* parent) {
    std::vector<QAPair> out;
    out.reserve(parsed.size());
    for (const auto& [question, answer] : parsed) {
        QAPair pair;
        pair.id = ids.next();
        pair.category_id = req.category_id;
        pair.question = question;
        pair.answer = answer;
        pair.status = PairStatus::pending;
        if (parent) {
            pair.origin = parent->origin;
            pair.source_doc_id = parent->source_doc_id;
            pair.parent_id = parent->id;
            pair.lineage = parent->lineage;
            pair.lineage.push_back(parent->id);
            pair.generation = parent->generation + 1;
        } else {
            pair.origin = req.origin();
            pair.source_doc_id = req.source_doc_id;
        }
        out.push_back(std::move(pair));
    }
    return out;
}

}  // namespace

std::vector<QAPair> materialize_pairs(std::string_view reply, const GenerationRequest& req,
                                      IdSequence& ids, const QAPair* parent) {
    return build_pairs(parse_qa_reply(reply, req.n), req, ids, parent);
}

std::vector<QAPair> generate_candidates(TextBackend& backend, const GenerationRequest& req,
                                        IdSequence& ids, const QAPair* parent) {
    req.validate();
    auto reply = backend.complete({completion_prompt(req), req.n});
    return materialize_pairs(reply, req, ids, parent);
}

std::vector<QAPair> generate_batch(TextBackend& backend, const std::vector<GenerationRequest>& reqs,
                                   IdSequence& ids, std::size_t max_concurrency) {
    for (const auto& req : reqs) {
        req.validate();
    }
    std::vector<std::vector<std::pair<std::string, std::string>>> parsed(reqs.size());
    bounded_parallel_for(reqs.size(), max_concurrency, [&](std::size_t i) {
        auto reply = backend.complete({completion_prompt(reqs[i]), reqs[i].n});
        parsed[i] = parse_qa_reply(reply, reqs[i].n);
    });
    std::vector<QAPair> out;
    for (std::size_t i = 0; i < reqs.size(); ++i) {
        auto pairs = build_pairs(parsed[i], reqs[i], ids, nullptr);
        std::move(pairs.begin(), pairs.end(), std::back_inserter(out));
    }
    return out;
}

std::vector<std::string> split_windows(std::string_view text, std::size_t budget_tokens,
                                       double overlap) {
    if (budget_tokens == 0) {
        fail(ErrorCode::ValidationError, "window budget must be >= 1 token");
    }
    if (whitespace_token_count(text) <= budget_tokens) {
        return {std::string(text)};
    }
    // Units are paragraphs; a paragraph over budget is cut into word chunks.
    std::vector<std::string> units;
    std::vector<std::size_t> sizes;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto end = text.find("\n\n", start);
        if (end == std::string_view::npos) {
            end = text.size();
        }
        auto paragraph = trim(text.substr(start, end - start));
        start = end + 2;
        if (paragraph.empty()) {
            continue;
        }
        auto count = whitespace_token_count(paragraph);
        if (count <= budget_tokens) {
            units.emplace_back(paragraph);
            sizes.push_back(count);
            continue;
        }
        std::vector<std::string> words;
        std::string word;
        for (char c : paragraph) {
            if (c == ' ' || c == '\n' || c == '\t') {
                if (!word.empty()) words.push_back(std::move(word)), word.clear();
            } else {
                word.push_back(c);
            }
        }
        if (!word.empty()) words.push_back(std::move(word));
        for (std::size_t i = 0; i < words.size(); i += budget_tokens) {
            std::string chunk;
            auto stop = std::min(words.size(), i + budget_tokens);
            for (std::size_t w = i; w < stop; ++w) {
                if (w > i) chunk.push_back(' ');
                chunk += words[w];
            }
            units.push_back(std::move(chunk));
            sizes.push_back(stop - i);
        }
    }
    std::vector<std::string> windows;
    std::size_t i = 0;
    while (i < units.size()) {
        std::size_t j = i;
        std::size_t tokens = 0;
        while (j < units.size() && tokens + sizes[j] <= budget_tokens) {
            tokens += sizes[j++];
        }
        std::string window;
        for (std::size_t u = i; u < j; ++u) {
            if (u > i) window += "\n\n";
            window += units[u];
        }
        windows.push_back(std::move(window));
        if (j == units.size()) {
            break;
        }
        auto target = static_cast<std::size_t>(std::ceil(overlap * static_cast<double>(tokens)));
        std::size_t k = j;
        std::size_t carried = 0;
        while (target > 0 && k > i + 1 && carried < target) {
            carried += sizes[--k];
        }
        i = k;
    }
    return windows;
}

void to_json(Json& j, const GeneratorRef& ref) {
    j = Json{{"kind", ref.kind == BackendKind::mock ? "mock" : "external"},
             {"endpoint", ref.endpoint},
             {"model_label", ref.model_label},
             {"max_concurrency", ref.max_concurrency},
             {"min_interval_ms", ref.min_interval_ms},
             {"timeout_ms", ref.timeout_ms}};
    j["rng_seed"] = ref.rng_seed ? Json(*ref.rng_seed) : Json(nullptr);
}

void from_json(const Json& j, GeneratorRef& ref) {
    auto kind = j.value("kind", "mock");
    if (kind == "mock") {
        ref.kind = BackendKind::mock;
    } else if (kind == "external") {
        ref.kind = BackendKind::external;
    } else {
        fail(ErrorCode::ConfigError, "unknown backend kind '" + kind + "'");
    }
    ref.endpoint = j.value("endpoint", "");
    ref.model_label = j.value("model_label", ref.kind == BackendKind::mock ? "mock" : "external");
    if (j.contains("rng_seed") && !j.at("rng_seed").is_null()) {
        ref.rng_seed = j.at("rng_seed").get<std::uint64_t>();
    } else {
        ref.rng_seed.reset();
    }
    ref.max_concurrency = j.value("max_concurrency", std::size_t{4});
    ref.min_interval_ms = j.value("min_interval_ms", 0);
    ref.timeout_ms = j.value("timeout_ms", 30000);
}

}  // namespace aquadapt
