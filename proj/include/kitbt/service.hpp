#pragma once

// HTTP front end of a session_manager. Bodies are JSON in the document
// formats of the other modules; the event stream is newline-delimited JSON.

#include <memory>
#include <string>

#include "kitbt/session.hpp"

namespace kitbt {

class service {
public:
    explicit service(session_manager& sessions);
    ~service();

    service(const service&) = delete;
    service& operator=(const service&) = delete;

    /// Binds `host:port` (port 0 picks a free one) and serves on a background
    /// thread. Returns the bound port.
    int start(const std::string& host = "127.0.0.1", int port = 0);
    /// Serves on the calling thread until stop().
    void run(const std::string& host, int port);
    void stop();

private:
    struct impl;
    std::unique_ptr<impl> impl_;
};

} // namespace kitbt
