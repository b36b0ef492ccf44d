#include "kitbt/service.hpp"

#include <atomic>
#include <thread>

#include <httplib.h>

#include "kitbt/serialization.hpp"

namespace kitbt {

namespace {

using nlohmann::json;

class bad_request : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

void send(httplib::Response& res, int code, const json& body) {
    res.status = code;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int code, const std::string& kind, const std::string& message,
                json extra = json::object()) {
    extra["error"] = kind;
    extra["message"] = message;
    send(res, code, extra);
}

json parse_body(const httplib::Request& req, bool allow_empty = true) {
    if (req.body.find_first_not_of(" \t\r\n") == std::string::npos) {
        if (allow_empty) {
            return json::object();
        }
        throw bad_request("request body is empty");
    }
    try {
        return parse_json(req.body, "request body");
    } catch (const format_error& e) {
        throw bad_request(e.what());
    }
}

// Runs a handler and maps the library's exceptions to status codes.
template <class Handler>
void guarded(httplib::Response& res, Handler handler) {
    try {
        handler();
    } catch (const bad_request& e) {
        send_error(res, 400, "bad_request", e.what());
    } catch (const unknown_session& e) {
        send_error(res, 404, "unknown_session", e.what());
    } catch (const unknown_scenario& e) {
        send_error(res, 404, "unknown_scenario", e.what());
    } catch (const invalid_phase_transition& e) {
        send_error(res, 409, "invalid_phase_transition", e.what(), {{"phase", to_string(e.phase)}});
    } catch (const format_error& e) {
        send_error(res, 422, "format_error", e.what(), {{"field", e.field}, {"line", e.line}});
    } catch (const no_achieving_action& e) {
        send_error(res, 422, "no_achieving_action", e.what(), {{"condition", e.condition}});
    } catch (const inconsistent_demos& e) {
        send_error(res, 422, "inconsistent_demos", e.what());
    } catch (const invalid_action& e) {
        send_error(res, 422, "invalid_action", e.what());
    } catch (const world_error& e) {
        send_error(res, 422, "world_error", e.what());
    } catch (const genome_error& e) {
        send_error(res, 422, "genome_error", e.what());
    } catch (const unknown_behavior& e) {
        send_error(res, 422, "unknown_behavior", e.what());
    } catch (const std::invalid_argument& e) {
        send_error(res, 400, "bad_request", e.what());
    } catch (const std::exception& e) {
        send_error(res, 500, "internal", e.what());
    }
}

std::size_t generations_of(const json& body) {
    auto g = body.find("generations");
    if (g == body.end() || !is_non_negative_integer(*g) || g->get<std::uint64_t>() == 0) {
        throw format_error("request body", 0, "/generations", "expected a positive integer");
    }
    for (auto it = body.begin(); it != body.end(); ++it) {
        if (it.key() != "generations") {
            throw format_error("request body", 0, "/" + it.key(), "unknown field");
        }
    }
    return g->get<std::size_t>();
}

std::vector<demonstration> demos_of(const json& body, const scenario_config& scenario) {
    std::vector<json> docs;
    if (auto d = body.find("demonstration"); d != body.end()) {
        docs.push_back(*d);
    }
    if (auto d = body.find("demonstrations"); d != body.end()) {
        if (!d->is_array()) {
            throw format_error("request body", 0, "/demonstrations", "expected an array");
        }
        docs.insert(docs.end(), d->begin(), d->end());
    }
    for (auto it = body.begin(); it != body.end(); ++it) {
        if (it.key() != "demonstration" && it.key() != "demonstrations" && it.key() != "flags") {
            throw format_error("request body", 0, "/" + it.key(), "unknown field");
        }
    }
    if (docs.empty()) {
        throw format_error("request body", 0, "/demonstrations", "no demonstration given");
    }
    std::vector<demonstration> out;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        try {
            out.push_back(demonstration_from_document(docs[i], scenario));
        } catch (const format_error& e) {
            throw format_error("request body", 0, "/demonstrations/" + std::to_string(i) + e.field, e.message);
        }
    }
    return out;
}

behavior_tree tree_of(const json& body, const session& s) {
    if (auto g = body.find("genome"); g != body.end()) {
        if (!g->is_string()) {
            throw format_error("request body", 0, "/genome", "expected a string");
        }
        behavior_tree t = parse_tree(g->get<std::string>());
        if (const auto v = validate(t); !v.empty()) {
            throw format_error("request body", 0, "/genome", "invalid tree: " + std::string(to_string(v.front().kind)));
        }
        return t;
    }
    if (auto t = body.find("tree"); t != body.end()) {
        try {
            return tree_from_file(*t, s.pool_id());
        } catch (const format_error& e) {
            throw format_error("request body", 0, "/tree" + e.field, e.message);
        }
    }
    throw format_error("request body", 0, "/", "expected genome or tree");
}

} // namespace

struct service::impl {
    explicit impl(session_manager& m) : sessions(m) {}

    session_manager& sessions;
    httplib::Server server;
    std::thread thread;
    std::atomic<bool> stopping{false};

    void routes();
    void stream_events(const httplib::Request& req, httplib::Response& res);
};

void service::impl::routes() {
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                {"Access-Control-Allow-Headers", "Content-Type"},
                                {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
    server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

    server.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            const std::string id = sessions.create(parse_body(req, false));
            send(res, 201, sessions.get(id)->summary());
        });
    });
    server.Get("/sessions", [this](const httplib::Request&, httplib::Response& res) {
        guarded(res, [&] { send(res, 200, {{"sessions", sessions.list()}}); });
    });
    server.Get(R"(/sessions/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            auto s = sessions.get(req.matches[1]);
            json body = s->summary();
            if (req.has_param("pool")) {
                body["pool"] = pool_manifest(generate_pool(s->config().scenario));
            }
            send(res, 200, body);
        });
    });
    server.Post(R"(/sessions/([^/]+)/gp/start)", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            auto s = sessions.get(req.matches[1]);
            s->start_gp(generations_of(parse_body(req, false)));
            send(res, 202, s->summary());
        });
    });
    server.Post(R"(/sessions/([^/]+)/gp/pause)", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            auto s = sessions.get(req.matches[1]);
            s->pause_gp();
            send(res, 202, s->summary());
        });
    });
    server.Post(R"(/sessions/([^/]+)/gp/resume)", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            auto s = sessions.get(req.matches[1]);
            s->resume_gp();
            send(res, 202, s->summary());
        });
    });
    server.Post(R"(/sessions/([^/]+)/demos)", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            auto s = sessions.get(req.matches[1]);
            const json body = parse_body(req, false);
            demo_options options;
            if (auto f = body.find("flags"); f != body.end()) {
                try {
                    options = demo_options_from_json(*f);
                } catch (const format_error& e) {
                    throw format_error("request body", 0, "/flags" + e.field, e.message);
                }
            }
            const demo_result r = s->add_demonstrations(demos_of(body, s->config().scenario), options);
            send(res, 200,
                 {{"constraints", to_json(r.constraints)},
                  {"baseline", r.baseline ? json(genome_text(*r.baseline)) : json(nullptr)},
                  {"goal", to_json(r.goal)},
                  {"goal_changed", r.goal_changed},
                  {"session", s->summary()}});
        });
    });
    server.Get(R"(/sessions/([^/]+)/best-tree)", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            auto s = sessions.get(req.matches[1]);
            const auto best = s->best();
            if (!best) {
                send_error(res, 404, "no_best_tree", "the GP has not started yet");
                return;
            }
            json body = tree_file(best->tree, s->pool_id());
            body["fitness"] = best->fitness;
            body["solved"] = best->solved;
            body["terms"] = to_json(best->terms);
            body["structure"] = tree_structure(best->tree);
            send(res, 200, body);
        });
    });
    server.Get(R"(/sessions/([^/]+)/history)", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            json records = json::array();
            for (const auto& r : sessions.get(req.matches[1])->history()) {
                records.push_back(to_json(r));
            }
            send(res, 200, {{"records", records}});
        });
    });
    server.Post(R"(/sessions/([^/]+)/run-tree)", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            auto s = sessions.get(req.matches[1]);
            const json body = parse_body(req);
            const episode_trace trace = body.empty() ? s->run_tree() : s->run_tree(tree_of(body, *s));
            send(res, 200, to_json(trace));
        });
    });
    server.Get(R"(/sessions/([^/]+)/events)",
               [this](const httplib::Request& req, httplib::Response& res) { stream_events(req, res); });
}

void service::impl::stream_events(const httplib::Request& req, httplib::Response& res) {
    std::shared_ptr<session> s;
    std::uint64_t from = 0;
    bool follow = false;
    guarded(res, [&] {
        s = sessions.get(req.matches[1]);
        if (req.has_param("from")) {
            const std::string v = req.get_param_value("from");
            if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos) {
                throw bad_request("from must be a non-negative integer");
            }
            from = std::stoull(v);
        }
        follow = req.has_param("follow") && req.get_param_value("follow") != "0";
    });
    if (!s) {
        return;
    }
    auto next = std::make_shared<std::uint64_t>(from);
    res.set_chunked_content_provider(
        "application/x-ndjson", [this, s, next, follow](std::size_t, httplib::DataSink& sink) {
            for (;;) {
                const auto events = s->events(*next);
                if (!events.empty()) {
                    std::string chunk;
                    for (const auto& e : events) {
                        chunk += to_json(e).dump() + "\n";
                    }
                    *next = events.back().seq + 1;
                    if (!sink.write(chunk.data(), chunk.size())) {
                        return false;
                    }
                    return true;
                }
                if (!follow || stopping) {
                    sink.done();
                    return true;
                }
                if (!sink.is_writable()) {
                    return false;
                }
                s->wait_for_event(*next, std::chrono::milliseconds(250));
            }
        });
}

service::service(session_manager& sessions) : impl_(std::make_unique<impl>(sessions)) { impl_->routes(); }

service::~service() { stop(); }

int service::start(const std::string& host, int port) {
    const int bound = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
    if (bound < 0) {
        throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
    }
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return bound;
}

void service::run(const std::string& host, int port) {
    if (!impl_->server.listen(host, port)) {
        throw std::runtime_error("cannot listen on " + host + ":" + std::to_string(port));
    }
}

void service::stop() {
    impl_->stopping = true;
    impl_->server.stop();
    if (impl_->thread.joinable()) {
        impl_->thread.join();
    }
}

} // namespace kitbt
