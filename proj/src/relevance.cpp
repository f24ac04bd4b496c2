#include "aquadapt/relevance.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

#include "aquadapt/error.hpp"
#include "aquadapt/tokenizer.hpp"

namespace aquadapt {

namespace {

constexpr std::string_view kSnapshotFormat = "aquadapt.bm25";
constexpr int kSnapshotVersion = 1;

double term_weight(double idf_value, double frequency, double doc_length, double avgdl,
                   const Bm25Params& params) {
    if (frequency <= 0.0) {
        return 0.0;
    }
    double norm = avgdl > 0.0 ? doc_length / avgdl : 0.0;
    return idf_value * frequency * (params.k1 + 1.0) /
           (frequency + params.k1 * (1.0 - params.b + params.b * norm));
}

}  // namespace

void Bm25Params::validate() const {
    if (!(k1 > 0.0) || !std::isfinite(k1)) {
        fail(ErrorCode::ValidationError, fmt::format("bm25 k1 must be > 0 (got {})", k1));
    }
    if (!(b >= 0.0 && b <= 1.0)) {
        fail(ErrorCode::ValidationError, fmt::format("bm25 b must be in [0,1] (got {})", b));
    }
    if (!std::isfinite(tau)) {
        fail(ErrorCode::ValidationError, "bm25 tau must be finite");
    }
}

AquaQuery AquaQuery::from_text(std::string_view text) {
    AquaQuery query;
    for (auto& token : word_tokens(text)) {
        query.terms.insert(std::move(token));
    }
    return query;
}

void Bm25Index::add(const std::string& doc_id, const std::vector<std::string>& terms) {
    if (!doc_lengths_.emplace(doc_id, terms.size()).second) {
        fail(ErrorCode::DuplicateDocId, "duplicate document id '" + doc_id + "'");
    }
    total_length_ += terms.size();
    for (const auto& term : terms) {
        ++postings_[term][doc_id];
    }
}

Bm25Index Bm25Index::build(std::span<const CleanDocument> docs) {
    Bm25Index index;
    for (const auto& doc : docs) {
        index.add(doc.id, word_tokens(doc.clean_text));
    }
    return index;
}

Bm25Index Bm25Index::build(const std::vector<std::pair<std::string, std::string>>& id_and_text) {
    Bm25Index index;
    for (const auto& [id, text] : id_and_text) {
        index.add(id, word_tokens(text));
    }
    return index;
}

double Bm25Index::avgdl() const {
    if (doc_lengths_.empty()) {
        return 0.0;
    }
    return static_cast<double>(total_length_) / static_cast<double>(doc_lengths_.size());
}

std::size_t Bm25Index::doc_length(const std::string& doc_id) const {
    auto it = doc_lengths_.find(doc_id);
    if (it == doc_lengths_.end()) {
        fail(ErrorCode::UnknownDoc, "document '" + doc_id + "' is not in the index");
    }
    return it->second;
}

std::size_t Bm25Index::term_frequency(const std::string& term, const std::string& doc_id) const {
    auto it = postings_.find(term);
    if (it == postings_.end()) {
        return 0;
    }
    auto doc = it->second.find(doc_id);
    return doc == it->second.end() ? 0 : doc->second;
}

std::size_t Bm25Index::doc_frequency(const std::string& term) const {
    auto it = postings_.find(term);
    return it == postings_.end() ? 0 : it->second.size();
}

Json Bm25Index::to_snapshot() const {
    Json postings = Json::object();
    for (const auto& [term, docs] : postings_) {
        postings[term] = docs;
    }
    return Json{{"format", kSnapshotFormat},
                {"version", kSnapshotVersion},
                {"doc_lengths", doc_lengths_},
                {"postings", postings}};
}

Bm25Index Bm25Index::from_snapshot(const Json& snapshot) {
    if (snapshot.value("format", "") != kSnapshotFormat) {
        fail(ErrorCode::ParseError, "not a bm25 index snapshot");
    }
    if (snapshot.value("version", 0) != kSnapshotVersion) {
        fail(ErrorCode::ParseError,
             fmt::format("unsupported index snapshot version {}", snapshot.value("version", 0)));
    }
    Bm25Index index;
    index.doc_lengths_ = snapshot.at("doc_lengths").get<std::map<std::string, std::size_t>>();
    for (const auto& [id, length] : index.doc_lengths_) {
        index.total_length_ += length;
    }
    std::map<std::string, std::size_t> per_doc_total;
    for (const auto& [term, docs] : snapshot.at("postings").items()) {
        auto& entry = index.postings_[term];
        for (const auto& [doc_id, frequency] : docs.items()) {
            if (!index.contains(doc_id)) {
                fail(ErrorCode::ValidationError,
                     "snapshot posting references unknown document '" + doc_id + "'");
            }
            entry[doc_id] = frequency.get<std::size_t>();
            per_doc_total[doc_id] += entry[doc_id];
        }
    }
    for (const auto& [id, length] : index.doc_lengths_) {
        if (per_doc_total[id] != length) {
            fail(ErrorCode::ValidationError,
                 "snapshot length for '" + id + "' disagrees with its postings");
        }
    }
    return index;
}

double idf(const std::string& term, const Bm25Index& index) {
    auto n = static_cast<double>(index.doc_count());
    auto df = static_cast<double>(index.doc_frequency(term));
    return std::log((n - df + 0.5) / (df + 0.5) + 1.0);
}

double bm25_score(const std::string& doc_id, const AquaQuery& query, const Bm25Index& index,
                  const Bm25Params& params) {
    auto length = static_cast<double>(index.doc_length(doc_id));
    double score = 0.0;
    for (const auto& term : query.terms) {
        auto frequency = static_cast<double>(index.term_frequency(term, doc_id));
        if (frequency > 0.0) {
            score += term_weight(idf(term, index), frequency, length, index.avgdl(), params);
        }
    }
    return score;
}

double bm25_score_text(std::string_view text, const AquaQuery& query, const Bm25Index& index,
                       const Bm25Params& params) {
    auto terms = word_tokens(text);
    std::map<std::string, std::size_t> counts;
    for (const auto& term : terms) {
        ++counts[term];
    }
    double avgdl = index.doc_count() > 0 ? index.avgdl() : static_cast<double>(terms.size());
    double score = 0.0;
    for (const auto& term : query.terms) {
        auto it = counts.find(term);
        if (it != counts.end()) {
            score += term_weight(idf(term, index), static_cast<double>(it->second),
                                 static_cast<double>(terms.size()), avgdl, params);
        }
    }
    return score;
}

std::vector<ScoredDoc> score_all(const Bm25Index& index, const AquaQuery& query,
                                 const Bm25Params& params) {
    std::vector<ScoredDoc> scored;
    scored.reserve(index.doc_count());
    for (const auto& [id, length] : index.doc_lengths()) {
        scored.push_back({id, bm25_score(id, query, index, params)});
    }
    std::stable_sort(scored.begin(), scored.end(), [](const ScoredDoc& a, const ScoredDoc& b) {
        if (a.score != b.score) {
            return a.score > b.score;
        }
        return a.id < b.id;
    });
    return scored;
}

std::vector<ScoredDoc> filter_relevant(const Bm25Index& index, const AquaQuery& query,
                                       const Bm25Params& params) {
    if (query.terms.empty()) {
        fail(ErrorCode::EmptyQuery, "relevance filtering needs a non-empty query");
    }
    params.validate();
    auto scored = score_all(index, query, params);
    std::erase_if(scored, [&](const ScoredDoc& d) { return !(d.score >= params.tau); });
    return scored;
}

std::vector<HistogramBin> score_histogram(std::span<const ScoredDoc> scores, std::size_t bins) {
    std::vector<HistogramBin> histogram;
    if (scores.empty() || bins == 0) {
        return histogram;
    }
    auto [lo_it, hi_it] = std::minmax_element(
        scores.begin(), scores.end(),
        [](const ScoredDoc& a, const ScoredDoc& b) { return a.score < b.score; });
    double lo = lo_it->score;
    double hi = hi_it->score;
    if (hi == lo) {
        histogram.push_back({lo, hi, scores.size()});
        return histogram;
    }
    double width = (hi - lo) / static_cast<double>(bins);
    for (std::size_t i = 0; i < bins; ++i) {
        histogram.push_back({lo + width * static_cast<double>(i),
                             lo + width * static_cast<double>(i + 1), 0});
    }
    for (const auto& s : scores) {
        auto bin = static_cast<std::size_t>((s.score - lo) / width);
        ++histogram[std::min(bin, bins - 1)].count;
    }
    return histogram;
}

void to_json(Json& j, const Bm25Params& params) {
    j = Json{{"k1", params.k1}, {"b", params.b}, {"tau", params.tau}};
}

void from_json(const Json& j, Bm25Params& params) {
    params.k1 = j.value("k1", 1.5);
    params.b = j.value("b", 0.75);
    params.tau = j.value("tau", 0.0);
    params.validate();
}

}  // namespace aquadapt
