#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "aquadapt/cleanup.hpp"
#include "aquadapt/curate.hpp"
#include "aquadapt/error.hpp"
#include "aquadapt/evalnlg.hpp"
#include "aquadapt/genkit.hpp"
#include "aquadapt/judgebench.hpp"
#include "aquadapt/relevance.hpp"
#include "aquadapt/review.hpp"

namespace aquadapt {

struct GenerationPlan {
    int expert_requests_per_category = 2;
    int pairs_per_request = 3;
    int fewshot_k = 3;
    int literature_pairs_per_window = 2;
    std::size_t window_tokens = 400;
};

/// Scripted expert used when no human is in the loop.
struct HeadlessReview {
    bool enabled = true;
    std::uint64_t rater_seed = 11;
    /// Share of ratings drawn from {4,5}; the rest from {2,3}.
    double accept_rate = 0.6;
};

struct PipelineConfig {
    std::string name = "aquadapt";
    std::filesystem::path corpus_manifest;
    std::filesystem::path taxonomy;
    std::optional<std::filesystem::path> gold;
    std::optional<std::filesystem::path> eval_samples;
    std::filesystem::path storage;
    std::optional<std::string> query;  // default: derived from the taxonomy
    Bm25Params bm25;
    CleanupConfig cleanup;
    ReviewPolicy review;
    GeneratorRef generator;
    std::vector<GeneratorRef> judges;
    GenerationPlan generation;
    HeadlessReview headless;
    int final_threshold = 4;
    double validation_fraction = 0.2;
    std::uint64_t split_seed = 7;
    int gold_fewshot = 3;
    bool strict_taxonomy = false;
    bool logical_clock = true;

    /// Bounds and path existence; throws ConfigError listing the first problem.
    void validate() const;
    /// Reseeds every mock backend, the scripted rater and the split.
    void apply_seed(std::uint64_t seed);
};

/// Relative paths inside the file resolve against the file's directory.
PipelineConfig load_config(const std::filesystem::path& path);
void to_json(Json& j, const PipelineConfig& cfg);

enum class JobKind { ingest, clean, index, filter, generate, cleanup, judge_bench, score, assemble, eval };
enum class JobState { queued, running, done, failed };

std::string_view to_string(JobKind kind);
JobKind parse_job_kind(std::string_view text);
std::string_view to_string(JobState state);

struct JobRecord {
    std::string job_id;
    JobKind kind = JobKind::ingest;
    JobState state = JobState::queued;
    std::size_t progress_done = 0;
    std::size_t progress_total = 0;
    std::optional<std::string> error;
};

void to_json(Json& j, const JobRecord& job);

using Progress = std::function<void(std::size_t done, std::size_t total)>;

/// Stage runner over one storage root. Each stage reads its inputs from and
/// writes its outputs to files under `storage`, so stages can run separately.
class Pipeline {
public:
    explicit Pipeline(PipelineConfig cfg);

    const PipelineConfig& config() const { return cfg_; }
    std::filesystem::path path(std::string_view name) const { return cfg_.storage / name; }

    /// The review store, recovered from the event log on first use.
    ReviewStore& store();

    void run_stage(JobKind kind, const Progress& progress = {});

    void ingest(const Progress& progress = {});
    void clean(const Progress& progress = {});
    void index(const Progress& progress = {});
    void filter(const Progress& progress = {});
    void generate(const Progress& progress = {});
    void cleanup(const Progress& progress = {});
    /// Scripted expert ratings and refinements until every expert lineage is
    /// accepted or out of rounds.
    void review_headless(const Progress& progress = {});
    void judge_bench(const Progress& progress = {});
    void score(const Progress& progress = {});
    DatasetManifest assemble(const Progress& progress = {});
    EvalReport eval(const Progress& progress = {});

    /// Clears storage and runs every stage in order.
    DatasetManifest run_all(const Progress& progress = {});

    /// Pairs eligible for judge scoring: accepted expert pairs plus literature
    /// pairs that passed cleanup.
    std::vector<QAPair> scoring_pool();

private:
    std::unique_ptr<TextBackend> judge_backend();
    AquaQuery query() const;

    PipelineConfig cfg_;
    std::unique_ptr<ReviewStore> store_;
    std::mutex store_mutex_;
};

/// One worker; jobs run strictly one at a time in submission order.
class JobQueue {
public:
    explicit JobQueue(Pipeline& pipeline);
    ~JobQueue();

    JobRecord submit(JobKind kind);
    std::optional<JobRecord> get(const std::string& job_id) const;
    /// Blocks until the job leaves queued/running.
    JobRecord wait(const std::string& job_id) const;

private:
    void worker();
    void persist(const JobRecord& job);

    Pipeline& pipeline_;
    mutable std::mutex mutex_;
    mutable std::condition_variable changed_;
    std::map<std::string, JobRecord> jobs_;
    std::deque<std::string> pending_;
    std::uint64_t counter_ = 0;
    bool stopping_ = false;
    std::unique_ptr<JsonlAppender> log_;
    std::thread thread_;
};

/// HTTP status for a library error code.
int http_status(ErrorCode code);

class ApiServer {
public:
    ApiServer(Pipeline& pipeline, JobQueue& jobs);
    ~ApiServer();

    /// Binds and serves on a background thread; returns the bound port
    /// (useful with port 0).
    int start(const std::string& host, int port);
    void stop();
    /// Serves on the calling thread until stop().
    void serve(const std::string& host, int port);

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace aquadapt
