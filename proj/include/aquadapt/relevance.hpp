#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "aquadapt/corpus.hpp"
#include "aquadapt/jsonl.hpp"

namespace aquadapt {

struct Bm25Params {
    double k1 = 1.5;
    double b = 0.75;
    /// Relevance threshold. Zero keeps every document.
    double tau = 0.0;

    void validate() const;
};

/// Query terms, already normalized by the shared tokenizer.
struct AquaQuery {
    std::set<std::string> terms;

    static AquaQuery from_text(std::string_view text);
};

/// Immutable inverted index over word tokens of cleaned documents.
class Bm25Index {
public:
    using DocTerms = std::map<std::string, std::size_t>;

    Bm25Index() = default;

    static Bm25Index build(std::span<const CleanDocument> docs);
    static Bm25Index build(const std::vector<std::pair<std::string, std::string>>& id_and_text);

    std::size_t doc_count() const { return doc_lengths_.size(); }
    double avgdl() const;
    bool contains(const std::string& doc_id) const { return doc_lengths_.count(doc_id) > 0; }

    std::size_t doc_length(const std::string& doc_id) const;
    std::size_t term_frequency(const std::string& term, const std::string& doc_id) const;
    std::size_t doc_frequency(const std::string& term) const;

    const std::map<std::string, std::size_t>& doc_lengths() const { return doc_lengths_; }
    const std::map<std::string, DocTerms>& postings() const { return postings_; }

    /// Versioned structured-text snapshot; load(dump()) reproduces the index exactly.
    Json to_snapshot() const;
    static Bm25Index from_snapshot(const Json& snapshot);

    friend bool operator==(const Bm25Index&, const Bm25Index&) = default;

private:
    void add(const std::string& doc_id, const std::vector<std::string>& terms);

    std::map<std::string, std::size_t> doc_lengths_;
    std::map<std::string, DocTerms> postings_;  // term -> doc id -> frequency
    std::size_t total_length_ = 0;
};

/// ln((N - n + 0.5) / (n + 0.5) + 1); strictly positive.
double idf(const std::string& term, const Bm25Index& index);

double bm25_score(const std::string& doc_id, const AquaQuery& query, const Bm25Index& index,
                  const Bm25Params& params);

/// Scores text that is not part of the index using the index's corpus
/// statistics (IDF, avgdl). Used to test QA pairs for topical drift.
double bm25_score_text(std::string_view text, const AquaQuery& query, const Bm25Index& index,
                       const Bm25Params& params);

struct ScoredDoc {
    std::string id;
    double score = 0.0;
};

/// Documents with score >= tau, by score descending then id ascending.
std::vector<ScoredDoc> filter_relevant(const Bm25Index& index, const AquaQuery& query,
                                       const Bm25Params& params);

/// Every document's score, in the same order as filter_relevant.
std::vector<ScoredDoc> score_all(const Bm25Index& index, const AquaQuery& query,
                                 const Bm25Params& params);

struct HistogramBin {
    double lower = 0.0;
    double upper = 0.0;
    std::size_t count = 0;
};

std::vector<HistogramBin> score_histogram(std::span<const ScoredDoc> scores, std::size_t bins);

void to_json(Json& j, const Bm25Params& params);
void from_json(const Json& j, Bm25Params& params);

}  // namespace aquadapt
