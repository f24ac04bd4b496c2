#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "aquadapt/jsonl.hpp"
#include "aquadapt/taxonomy.hpp"
#include "aquadapt/types.hpp"

namespace aquadapt {

enum class BackendKind { mock, external };

struct GeneratorRef {
    BackendKind kind = BackendKind::mock;
    std::string endpoint;  // external only, e.g. http://127.0.0.1:8080/complete
    std::string model_label = "mock";
    std::optional<std::uint64_t> rng_seed;  // mock only
    std::size_t max_concurrency = 4;
    int min_interval_ms = 0;
    int timeout_ms = 30000;

    void validate() const;
};

/// What a backend is asked to do; only the mock needs to know.
enum class BackendRole { generator, judge, gate };

struct BackendRequest {
    std::string prompt;
    int pair_count = 0;
};

class TextBackend {
public:
    virtual ~TextBackend() = default;
    virtual std::string complete(const BackendRequest& request) = 0;
    virtual const std::string& label() const = 0;
};

/// Pure, reentrant backend whose reply depends only on (prompt, seed, n).
class MockBackend : public TextBackend {
public:
    MockBackend(std::uint64_t seed, BackendRole role, std::string label);

    std::string complete(const BackendRequest& request) override;
    const std::string& label() const override { return label_; }

    /// Marker that opens the text a mock judge or gate scores.
    static constexpr std::string_view kCandidateMarker = "### Candidate";

private:
    std::string generate(const BackendRequest& request) const;

    std::uint64_t seed_;
    BackendRole role_;
    std::string label_;
};

/// Sends the prompt as a plain-text POST body and returns the plain-text reply.
/// Every exchange is appended verbatim to the audit log when one is given.
class HttpBackend : public TextBackend {
public:
    HttpBackend(GeneratorRef ref, std::optional<std::filesystem::path> audit_log);
    ~HttpBackend() override;

    std::string complete(const BackendRequest& request) override;
    const std::string& label() const override { return ref_.model_label; }

private:
    struct Impl;
    GeneratorRef ref_;
    std::unique_ptr<Impl> impl_;
};

std::unique_ptr<TextBackend> make_backend(const GeneratorRef& ref, BackendRole role,
                                          std::optional<std::filesystem::path> audit_log = {});

/// Monotonic id source ("qa-000001", ...). `resume_after` skips used numbers.
class IdSequence {
public:
    explicit IdSequence(std::string prefix, std::uint64_t resume_after = 0)
        : prefix_(std::move(prefix)), counter_(resume_after) {}

    std::string next();
    std::uint64_t last() const { return counter_; }

    /// Numeric suffix of an id produced by this prefix, if it has one.
    std::optional<std::uint64_t> parse(std::string_view id) const;

private:
    std::string prefix_;
    std::uint64_t counter_;
};

struct GenerationRequest {
    std::string prompt;
    std::string category_id;
    int n = 1;
    std::optional<std::string> source_doc_id;  // literature path only

    Origin origin() const {
        return source_doc_id ? Origin::literature : Origin::expert_synthetic;
    }
    void validate() const;
};

/// system text, the first k seeds as Q:/A: exemplars, the instruction with the
/// category name substituted, then the document text on the literature path.
std::string assemble_prompt(const PromptTemplate& tmpl, std::string_view category_name,
                            const std::vector<SeedPair>& seeds, int k,
                            std::optional<std::string_view> document = std::nullopt);

/// Strict alternating Q:/A: parsing; anything else is BackendMalformedReply.
std::vector<std::pair<std::string, std::string>> parse_qa_reply(std::string_view reply,
                                                                int expected);

std::string render_qa_reply(const std::vector<std::pair<std::string, std::string>>& pairs);

/// The prompt actually sent: the request prompt plus the pair-count instruction.
std::string completion_prompt(const GenerationRequest& request);

/// Parses a reply and turns it into pending pairs with fresh ids.
std::vector<QAPair> materialize_pairs(std::string_view reply, const GenerationRequest& req,
                                      IdSequence& ids, const QAPair* parent = nullptr);

/// Returns exactly req.n pending pairs. With `parent`, pairs are refinements:
/// generation and lineage extend the parent's, origin and source are inherited.
std::vector<QAPair> generate_candidates(TextBackend& backend, const GenerationRequest& req,
                                        IdSequence& ids, const QAPair* parent = nullptr);

/// Generates for many requests with bounded concurrency. Ids are assigned in
/// request order after all replies arrive, so output does not depend on timing.
std::vector<QAPair> generate_batch(TextBackend& backend, const std::vector<GenerationRequest>& reqs,
                                   IdSequence& ids, std::size_t max_concurrency);

/// Splits text at paragraph boundaries into windows of at most `budget_tokens`
/// whitespace tokens; consecutive windows share about `overlap` of a window.
std::vector<std::string> split_windows(std::string_view text, std::size_t budget_tokens,
                                       double overlap = 0.1);

void to_json(Json& j, const GeneratorRef& ref);
void from_json(const Json& j, GeneratorRef& ref);

}  // namespace aquadapt
