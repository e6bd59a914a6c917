#include "armed/service.hpp"

#include <algorithm>
#include <thread>

#include <httplib.h>

#include "armed/errors.hpp"

namespace armed {

namespace {

nlohmann::ordered_json judgment_response(const AssessmentResult& result) {
    nlohmann::ordered_json doc;
    doc["level"] = level_name(result.judgment.level);
    doc["eval_level"] = eval_level_name(to_eval_level(result.judgment.level));
    doc["branch"] = result.judgment.branch;
    nlohmann::ordered_json trace = nlohmann::ordered_json::array();
    for (const auto& application : result.judgment.rule_trace) {
        trace.push_back({{"rule_id", application.rule_id},
                         {"effect", application.effect},
                         {"from", level_machine_name(application.from)},
                         {"to", level_machine_name(application.to)}});
    }
    doc["rule_trace"] = trace;
    doc["cheating"] = result.judgment.cheating;
    doc["rendered"] = result.judgment.rendered;
    return doc;
}

void fail(httplib::Response& res, int status, const std::string& message) {
    res.status = status;
    res.set_content(nlohmann::ordered_json{{"error", message}}.dump(), "application/json");
}

ImageAttributes image_attrs_from_request(const nlohmann::json& doc) {
    ImageAttributes attrs;
    auto scalar = [&](const char* key) -> std::optional<std::string> {
        if (doc.contains(key) && doc.at(key).is_string() &&
            !doc.at(key).get<std::string>().empty()) {
            return doc.at(key).get<std::string>();
        }
        return std::nullopt;
    };
    attrs.brand = scalar("brand");
    attrs.product_name = scalar("product_name");
    attrs.dosage = scalar("dosage");
    attrs.user_group = scalar("user_group");
    if (doc.contains("efficacy")) {
        if (doc.at("efficacy").is_array()) {
            for (const auto& item : doc.at("efficacy")) {
                if (item.is_string()) attrs.efficacy.push_back(item.get<std::string>());
            }
        } else if (doc.at("efficacy").is_string()) {
            attrs.efficacy = split_terms(doc.at("efficacy").get<std::string>());
        }
    }
    attrs.image_ref = doc.value("image_ref", "");
    return attrs;
}

}  // namespace

struct JudgeService::Impl {
    const Pipeline& pipeline;
    httplib::Server server;
    std::thread worker;

    explicit Impl(const Pipeline& p) : pipeline(p) {}
};

JudgeService::JudgeService(const Pipeline& pipeline, int concurrency)
    : impl_(std::make_unique<Impl>(pipeline)) {
    const int workers = std::max(1, concurrency);
    impl_->server.new_task_queue = [workers] { return new httplib::ThreadPool(workers); };

    impl_->server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
        res.set_content("ok", "text/plain");
    });

    impl_->server.Post("/v1/judge", [this](const httplib::Request& req, httplib::Response& res) {
        nlohmann::json doc = nlohmann::json::parse(req.body, nullptr, false);
        if (doc.is_discarded() || !doc.is_object()) {
            fail(res, 400, "body must be a JSON object");
            return;
        }
        if (!doc.contains("query") || !doc["query"].is_string() ||
            doc["query"].get<std::string>().empty()) {
            fail(res, 400, "query must be a non-empty string");
            return;
        }
        if (!doc.contains("spu_name") || !doc["spu_name"].is_string() ||
            doc["spu_name"].get<std::string>().empty()) {
            fail(res, 400, "spu_name must be a non-empty string");
            return;
        }
        RawSPU spu;
        spu.raw_name = doc["spu_name"].get<std::string>();
        if (doc.contains("cpv")) {
            if (!doc["cpv"].is_object()) {
                fail(res, 400, "cpv must be an object of string values");
                return;
            }
            for (auto it = doc["cpv"].begin(); it != doc["cpv"].end(); ++it) {
                if (!it.value().is_string()) {
                    fail(res, 400, "cpv values must be strings");
                    return;
                }
                spu.cpv[it.key()] = it.value().get<std::string>();
            }
        }
        std::vector<ImageAttributes> image_attrs;
        if (doc.contains("image_attrs")) {
            if (!doc["image_attrs"].is_array()) {
                fail(res, 400, "image_attrs must be an array");
                return;
            }
            for (const auto& item : doc["image_attrs"]) {
                if (!item.is_object()) {
                    fail(res, 400, "image_attrs entries must be objects");
                    return;
                }
                image_attrs.push_back(image_attrs_from_request(item));
            }
        }
        const auto& categories = impl_->pipeline.categories();
        spu.category = doc.value("category", std::string("Others"));
        if (std::find(categories.begin(), categories.end(), spu.category) == categories.end()) {
            fail(res, 400, "unknown category: " + spu.category);
            return;
        }

        try {
            auto result =
                impl_->pipeline.assess(doc["query"].get<std::string>(), spu, image_attrs);
            res.set_content(judgment_response(result).dump(), "application/json");
        } catch (const Error& e) {
            if (e.code() == Errc::standardization_required ||
                e.code() == Errc::no_backend_for_role) {
                fail(res, 503, e.what());
            } else if (e.code() == Errc::schema_error) {
                fail(res, 400, e.what());
            } else {
                fail(res, 500, e.what());
            }
        }
    });
}

JudgeService::~JudgeService() { stop(); }

int JudgeService::start(const std::string& host, int port) {
    if (port == 0) {
        port_ = impl_->server.bind_to_any_port(host);
        if (port_ <= 0) raise(Errc::io_error, "cannot bind service socket");
    } else {
        if (!impl_->server.bind_to_port(host, port)) {
            raise(Errc::io_error, "cannot bind service port " + std::to_string(port));
        }
        port_ = port;
    }
    impl_->worker = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return port_;
}

void JudgeService::run(const std::string& host, int port) {
    port_ = port;
    if (!impl_->server.listen(host, port)) {
        raise(Errc::io_error, "cannot listen on port " + std::to_string(port));
    }
}

void JudgeService::stop() {
    if (!impl_) return;
    impl_->server.stop();
    if (impl_->worker.joinable()) impl_->worker.join();
}

}  // namespace armed
