#include <httplib.h>

#include <fmt/format.h>

#include "aquadapt/error.hpp"
#include "aquadapt/service.hpp"

namespace aquadapt {

int http_status(ErrorCode code) {
    switch (code) {
        case ErrorCode::UnknownPair:
        case ErrorCode::UnknownDoc:
            return 404;
        case ErrorCode::StaleVersion:
        case ErrorCode::PairFinalized:
        case ErrorCode::PairNotFlagged:
        case ErrorCode::RoundsExhausted:
            return 409;
        case ErrorCode::IllegalScore:
            return 422;
        case ErrorCode::ValidationError:
        case ErrorCode::ParseError:
        case ErrorCode::NotEnoughSeeds:
            return 400;
        case ErrorCode::BackendUnavailable:
        case ErrorCode::BackendMalformedReply:
            return 502;
        default:
            return 500;
    }
}

namespace {

void send_json(httplib::Response& res, int status, const Json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view code, const std::string& message) {
    send_json(res, status, {{"error", code}, {"message", message}});
}

Json parse_body(const httplib::Request& req) {
    try {
        auto body = Json::parse(req.body);
        if (!body.is_object()) {
            fail(ErrorCode::ParseError, "request body must be a JSON object");
        }
        return body;
    } catch (const Json::exception& e) {
        fail(ErrorCode::ParseError, std::string("malformed JSON body: ") + e.what());
    }
}

// Wraps a handler so library errors become status codes with a JSON body.
template <typename Fn>
httplib::Server::Handler guarded(Fn fn) {
    return [fn](const httplib::Request& req, httplib::Response& res) {
        try {
            fn(req, res);
        } catch (const Error& e) {
            send_error(res, http_status(e.code()), error_code_name(e.code()), e.what());
        } catch (const Json::exception& e) {
            send_error(res, 400, "ParseError", e.what());
        } catch (const std::exception& e) {
            send_error(res, 500, "InternalError", e.what());
        }
    };
}

Json pair_view(ReviewStore& store, const std::string& id) {
    auto pair = store.get(id);
    if (!pair) {
        fail(ErrorCode::UnknownPair, "unknown pair '" + id + "'");
    }
    return {{"pair", *pair}, {"lineage", store.lineage_of(id)}, {"ratings", pair->ratings}};
}

}  // namespace

struct ApiServer::Impl {
    Pipeline& pipeline;
    JobQueue& jobs;
    httplib::Server server;
    std::thread thread;

    Impl(Pipeline& p, JobQueue& j) : pipeline(p), jobs(j) { routes(); }

    void routes() {
        server.Get("/api/queue", guarded([this](const httplib::Request& req, httplib::Response& res) {
            std::optional<std::string> category;
            if (req.has_param("category") && !req.get_param_value("category").empty()) {
                category = req.get_param_value("category");
            }
            send_json(res, 200, {{"pairs", pipeline.store().queue(category)}});
        }));

        server.Get(R"(/api/pairs/([^/]+))",
                   guarded([this](const httplib::Request& req, httplib::Response& res) {
                       send_json(res, 200, pair_view(pipeline.store(), req.matches[1]));
                   }));

        server.Post(R"(/api/pairs/([^/]+)/ratings)",
                    guarded([this](const httplib::Request& req, httplib::Response& res) {
                        std::string id = req.matches[1];
                        auto body = parse_body(req);
                        if (!body.contains("score") || !body.at("score").is_number_integer()) {
                            fail(ErrorCode::IllegalScore, "score must be an integer 2-5");
                        }
                        if (!body.contains("rater") || !body.at("rater").is_string() ||
                            body.at("rater").get<std::string>().empty()) {
                            fail(ErrorCode::ValidationError, "rater is required");
                        }
                        RatingRecord record;
                        record.rater = body.at("rater").get<std::string>();
                        record.score = body.at("score").get<int>();
                        if (body.contains("note") && body.at("note").is_string()) {
                            record.note = body.at("note").get<std::string>();
                        }
                        std::optional<std::int64_t> version;
                        if (body.contains("version") && !body.at("version").is_null()) {
                            version = body.at("version").get<std::int64_t>();
                        }
                        auto& store = pipeline.store();
                        auto status = store.submit_rating(id, record, version);
                        auto view = pair_view(store, id);
                        view["status"] = std::string(to_string(status));
                        send_json(res, 200, view);
                    }));

        server.Post(R"(/api/pairs/([^/]+)/refine)",
                    guarded([this](const httplib::Request& req, httplib::Response& res) {
                        std::string id = req.matches[1];
                        auto body = req.body.empty() ? Json::object() : parse_body(req);
                        RefinementRequest request;
                        if (body.contains("template") && !body.at("template").is_null()) {
                            request.revised_template = body.at("template").get<PromptTemplate>();
                        }
                        if (body.contains("seeds") && !body.at("seeds").is_null()) {
                            request.revised_seeds = body.at("seeds").get<std::vector<SeedPair>>();
                        }
                        request.regenerate_as_is = body.value("regenerate_as_is", false);
                        if (body.contains("version") && !body.at("version").is_null()) {
                            request.expected_version = body.at("version").get<std::int64_t>();
                        }
                        request.fewshot_k = body.value("fewshot_k", request.fewshot_k);
                        auto backend = make_backend(pipeline.config().generator, BackendRole::generator);
                        auto child = pipeline.store().request_refinement(id, request, *backend);
                        send_json(res, 201, pair_view(pipeline.store(), child.id));
                    }));

        server.Get("/api/taxonomy", guarded([this](const httplib::Request&, httplib::Response& res) {
            send_json(res, 200, Json(*pipeline.store().taxonomy()));
        }));

        server.Put("/api/taxonomy", guarded([this](const httplib::Request& req, httplib::Response& res) {
            auto body = parse_body(req);
            if (!body.contains("version") || !body.at("version").is_number_integer()) {
                fail(ErrorCode::ValidationError, "taxonomy body needs its integer version");
            }
            auto expected = body.at("version").get<std::int64_t>();
            bool strict = pipeline.config().strict_taxonomy;
            Taxonomy revised;
            try {
                revised = parse_taxonomy(body, strict);
            } catch (const Error& e) {
                // A well-formed but invalid taxonomy is unprocessable, not malformed.
                send_error(res, 422, error_code_name(e.code()), e.what());
                return;
            }
            auto stored = pipeline.store().update_taxonomy(revised, expected, strict);
            send_json(res, 200, Json(stored));
        }));

        server.Post("/api/jobs", guarded([this](const httplib::Request& req, httplib::Response& res) {
            auto body = parse_body(req);
            auto kind = parse_job_kind(body.at("kind").get<std::string>());
            send_json(res, 202, Json(jobs.submit(kind)));
        }));

        server.Get(R"(/api/jobs/([^/]+))",
                   guarded([this](const httplib::Request& req, httplib::Response& res) {
                       auto job = jobs.get(req.matches[1]);
                       if (!job) {
                           send_error(res, 404, "UnknownJob", "unknown job '" + std::string(req.matches[1]) + "'");
                           return;
                       }
                       send_json(res, 200, Json(*job));
                   }));

        auto report = [this](const char* file) {
            return guarded([this, file](const httplib::Request&, httplib::Response& res) {
                auto p = pipeline.path(file);
                if (!std::filesystem::exists(p)) {
                    send_error(res, 404, "NoReport", std::string(file) + " has not been produced yet");
                    return;
                }
                send_json(res, 200, Json::parse(read_text_file(p)));
            });
        };
        server.Get("/api/reports/judgebench", report("judgebench.json"));
        server.Get("/api/reports/eval", report("eval.json"));
    }
};

ApiServer::ApiServer(Pipeline& pipeline, JobQueue& jobs)
    : impl_(std::make_unique<Impl>(pipeline, jobs)) {}

ApiServer::~ApiServer() { stop(); }

int ApiServer::start(const std::string& host, int port) {
    int bound = port;
    if (port == 0) {
        bound = impl_->server.bind_to_any_port(host);
    } else if (!impl_->server.bind_to_port(host, port)) {
        fail(ErrorCode::IoError, fmt::format("cannot bind {}:{}", host, port));
    }
    if (bound < 0) {
        fail(ErrorCode::IoError, "cannot bind " + host);
    }
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return bound;
}

void ApiServer::serve(const std::string& host, int port) {
    if (!impl_->server.listen(host, port)) {
        fail(ErrorCode::IoError, fmt::format("cannot serve on {}:{}", host, port));
    }
}

void ApiServer::stop() {
    impl_->server.stop();
    if (impl_->thread.joinable()) {
        impl_->thread.join();
    }
}

}  // namespace aquadapt
