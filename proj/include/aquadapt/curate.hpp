#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "aquadapt/genkit.hpp"
#include "aquadapt/jsonl.hpp"
#include "aquadapt/types.hpp"

namespace aquadapt {

struct GoldExemplar {
    std::string question;
    std::string answer;
    int score = 0;
};

struct ScoreFailure {
    std::string pair_id;
    std::string reason;
    std::string raw_reply;
};

struct ScoredPool {
    std::vector<QAPair> pairs;  // input order; failed pairs are returned unchanged
    std::vector<ScoreFailure> failures;
};

std::string judge_scoring_prompt(const QAPair& pair, const std::vector<GoldExemplar>& fewshot);

/// Accepts a bare integer 2..5 (surrounding whitespace allowed); anything else
/// is UnparseableScore.
int parse_judge_score(std::string_view reply);

/// Appends one judge RatingRecord per pair. Unparseable replies are isolated
/// per pair; a BackendUnavailable aborts the whole call.
ScoredPool score_pool(TextBackend& judge, std::vector<QAPair> pairs,
                      const std::vector<GoldExemplar>& fewshot, std::size_t max_concurrency = 4,
                      std::int64_t timestamp = 0);

std::optional<int> judge_score(const QAPair& pair);

/// Pairs whose latest judge score is >= threshold, in input order.
std::vector<QAPair> filter_final(const std::vector<QAPair>& pairs, int threshold = 4);

/// Union keyed on the normalized question. On a collision the expert-origin
/// pair wins, then the smaller id. Output sorted by id.
std::vector<QAPair> merge_datasets(const std::vector<QAPair>& expert,
                                   const std::vector<QAPair>& literature_clean);

struct DatasetSplit {
    std::vector<QAPair> train;
    std::vector<QAPair> validation;
};

/// Seeded shuffle then cut; stratified by category when every category holds
/// at least two pairs. Both halves come back sorted by id.
DatasetSplit split_dataset(const std::vector<QAPair>& pairs, double validation_fraction,
                           std::uint64_t rng_seed);

struct DatasetManifest {
    std::string name;
    std::vector<std::pair<std::string, std::size_t>> source_sets;  // origin, count
    std::size_t final_count = 0;
    int threshold_used = 4;
    std::string judge_label;
    std::size_t train_count = 0;
    std::size_t validation_count = 0;
    std::string content_digest;
};

/// The exported line for one pair.
Json final_record(const QAPair& pair);

/// SHA-256 over the canonical serialization of the records, in id order.
std::string dataset_digest(const std::vector<QAPair>& pairs);

DatasetManifest build_manifest(std::string name, const std::vector<QAPair>& expert_stream,
                               const std::vector<QAPair>& literature_stream,
                               const std::vector<QAPair>& final_pairs, const DatasetSplit& split,
                               int threshold, std::string judge_label);

/// Writes final.jsonl, train.jsonl, validation.jsonl and manifest.json.
void export_dataset(const std::filesystem::path& dir, const std::vector<QAPair>& final_pairs,
                    const DatasetSplit& split, const DatasetManifest& manifest);

void to_json(Json& j, const DatasetManifest& manifest);
void from_json(const Json& j, DatasetManifest& manifest);
void to_json(Json& j, const ScoreFailure& failure);

}  // namespace aquadapt
