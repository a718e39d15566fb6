#pragma once

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <atomic>
#include <deque>
#include <functional>
#include <mutex>
#include <string>
#include <thread>

namespace iclprobe::testing {

/// Local completions endpoint replaying a recorded response body. Counts
/// every request it receives; a queue of status codes can be scripted
/// ahead of the recorded response to exercise retries.
class StubCompletionServer {
public:
    explicit StubCompletionServer(std::string recorded_text = " Bar")
        : recorded_text_(std::move(recorded_text)) {
        server_.Post("/v1/completions", [this](const httplib::Request& req, httplib::Response& res) {
            ++requests_;
            {
                std::lock_guard lock(mutex_);
                last_body_ = req.body;
                last_auth_ = req.get_header_value("Authorization");
                if (!scripted_.empty()) {
                    auto [status, body] = scripted_.front();
                    scripted_.pop_front();
                    res.status = status;
                    res.set_content(body, "application/json");
                    return;
                }
            }
            nlohmann::json reply = {
                {"id", "cmpl-stub"},
                {"object", "text_completion"},
                {"choices", {{{"index", 0}, {"text", recorded_text_}, {"finish_reason", "stop"}}}},
            };
            res.set_content(reply.dump(), "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    ~StubCompletionServer() {
        server_.stop();
        if (thread_.joinable()) thread_.join();
    }

    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1/completions"; }
    std::size_t requests() const { return requests_.load(); }

    void script(int status, std::string body) {
        std::lock_guard lock(mutex_);
        scripted_.emplace_back(status, std::move(body));
    }

    std::string last_body() const {
        std::lock_guard lock(mutex_);
        return last_body_;
    }
    std::string last_auth() const {
        std::lock_guard lock(mutex_);
        return last_auth_;
    }

private:
    httplib::Server server_;
    std::string recorded_text_;
    int port_ = 0;
    std::thread thread_;
    std::atomic<std::size_t> requests_{0};
    mutable std::mutex mutex_;
    std::deque<std::pair<int, std::string>> scripted_;
    std::string last_body_;
    std::string last_auth_;
};

}  // namespace iclprobe::testing
