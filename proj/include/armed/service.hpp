#pragma once

#include <memory>

#include "armed/pipeline.hpp"

namespace armed {

/// HTTP front end over the pipeline.
///   POST /v1/judge  {query, spu_name, cpv?, image_attrs?, category?}
///                   -> {level, eval_level, branch, rule_trace, cheating, rendered}
///   GET  /healthz   -> "ok"
/// Schema violations return 400; an unservable judgment (standardization
/// required with no backend) returns 503.
class JudgeService {
public:
    JudgeService(const Pipeline& pipeline, int concurrency = 4);
    ~JudgeService();

    JudgeService(const JudgeService&) = delete;
    JudgeService& operator=(const JudgeService&) = delete;

    /// Binds and serves on a background thread. port 0 picks a free port.
    /// Returns the bound port.
    int start(const std::string& host, int port);

    /// Serves on the calling thread until stopped.
    void run(const std::string& host, int port);

    void stop();
    int port() const { return port_; }

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    int port_ = 0;
};

}  // namespace armed
