#include <fmt/format.h>

#include "aquadapt/error.hpp"
#include "aquadapt/service.hpp"

namespace aquadapt {

namespace {

constexpr std::array<std::pair<JobKind, std::string_view>, 10> kJobKinds = {{
    {JobKind::ingest, "ingest"},
    {JobKind::clean, "clean"},
    {JobKind::index, "index"},
    {JobKind::filter, "filter"},
    {JobKind::generate, "generate"},
    {JobKind::cleanup, "cleanup"},
    {JobKind::judge_bench, "judge_bench"},
    {JobKind::score, "score"},
    {JobKind::assemble, "assemble"},
    {JobKind::eval, "eval"},
}};

}  // namespace

std::string_view to_string(JobKind kind) {
    for (const auto& [k, name] : kJobKinds) {
        if (k == kind) return name;
    }
    return "ingest";
}

JobKind parse_job_kind(std::string_view text) {
    for (const auto& [k, name] : kJobKinds) {
        if (name == text) return k;
    }
    fail(ErrorCode::ValidationError, "unknown job kind '" + std::string(text) + "'");
}

std::string_view to_string(JobState state) {
    switch (state) {
        case JobState::queued: return "queued";
        case JobState::running: return "running";
        case JobState::done: return "done";
        case JobState::failed: return "failed";
    }
    return "queued";
}

void to_json(Json& j, const JobRecord& job) {
    j = Json{{"job_id", job.job_id},
             {"kind", std::string(to_string(job.kind))},
             {"state", std::string(to_string(job.state))},
             {"progress", {{"done", job.progress_done}, {"total", job.progress_total}}},
             {"error", job.error ? Json(*job.error) : Json(nullptr)}};
}

JobQueue::JobQueue(Pipeline& pipeline) : pipeline_(pipeline) {
    auto path = pipeline_.path("jobs.jsonl");
    if (std::filesystem::exists(path)) {
        // Later lines supersede earlier ones; anything unfinished died with the
        // previous process.
        for (const auto& r : read_jsonl(path, true)) {
            JobRecord job;
            job.job_id = r.at("job_id").get<std::string>();
            job.kind = parse_job_kind(r.at("kind").get<std::string>());
            job.state = r.at("state") == "done" ? JobState::done : JobState::failed;
            job.progress_done = r.at("progress").at("done").get<std::size_t>();
            job.progress_total = r.at("progress").at("total").get<std::size_t>();
            if (!r.at("error").is_null()) job.error = r.at("error").get<std::string>();
            if (r.at("state") == "queued" || r.at("state") == "running") job.error = "interrupted";
            counter_ = std::max<std::uint64_t>(counter_, std::stoull(job.job_id.substr(4)));
            jobs_[job.job_id] = job;
        }
    }
    log_ = std::make_unique<JsonlAppender>(path);
    thread_ = std::thread([this] { worker(); });
}

JobQueue::~JobQueue() {
    {
        std::lock_guard lock(mutex_);
        stopping_ = true;
    }
    changed_.notify_all();
    thread_.join();
}

JobRecord JobQueue::submit(JobKind kind) {
    JobRecord job;
    {
        std::lock_guard lock(mutex_);
        job.job_id = fmt::format("job-{:06d}", ++counter_);
        job.kind = kind;
        jobs_[job.job_id] = job;
        pending_.push_back(job.job_id);
    }
    persist(job);
    changed_.notify_all();
    return job;
}

std::optional<JobRecord> JobQueue::get(const std::string& job_id) const {
    std::lock_guard lock(mutex_);
    auto it = jobs_.find(job_id);
    if (it == jobs_.end()) return std::nullopt;
    return it->second;
}

JobRecord JobQueue::wait(const std::string& job_id) const {
    std::unique_lock lock(mutex_);
    auto it = jobs_.find(job_id);
    if (it == jobs_.end()) {
        fail(ErrorCode::UnknownPair, "unknown job '" + job_id + "'");
    }
    changed_.wait(lock, [&] {
        return it->second.state == JobState::done || it->second.state == JobState::failed;
    });
    return it->second;
}

void JobQueue::persist(const JobRecord& job) { log_->append(Json(job)); }

void JobQueue::worker() {
    for (;;) {
        std::string id;
        JobRecord snapshot;
        {
            std::unique_lock lock(mutex_);
            changed_.wait(lock, [&] { return stopping_ || !pending_.empty(); });
            if (stopping_) return;
            id = pending_.front();
            pending_.pop_front();
            jobs_[id].state = JobState::running;
            snapshot = jobs_[id];
        }
        persist(snapshot);
        changed_.notify_all();

        auto progress = [&](std::size_t done, std::size_t total) {
            std::lock_guard lock(mutex_);
            jobs_[id].progress_done = done;
            jobs_[id].progress_total = total;
        };
        std::optional<std::string> error;
        try {
            pipeline_.run_stage(snapshot.kind, progress);
        } catch (const Error& e) {
            error = fmt::format("{}: {}", error_code_name(e.code()), e.what());
        } catch (const std::exception& e) {
            error = e.what();
        }
        {
            std::lock_guard lock(mutex_);
            auto& job = jobs_[id];
            job.state = error ? JobState::failed : JobState::done;
            job.error = error;
            snapshot = job;
        }
        persist(snapshot);
        changed_.notify_all();
    }
}

}  // namespace aquadapt
