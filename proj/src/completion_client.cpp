#include <httplib.h>

#include "iclprobe/error.hpp"
#include "iclprobe/model_gateway.hpp"
#include "iclprobe/text.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <thread>

namespace iclprobe {

using json = nlohmann::json;

namespace {

struct Outcome {
    bool retryable = false;
    std::optional<std::string> text;
    std::optional<GatewayError> error;
    std::optional<std::chrono::milliseconds> retry_after;
};

bool mentions_context_length(std::string_view body) {
    const auto lower = text::ascii_lower(body);
    return lower.find("context_length") != std::string::npos ||
           lower.find("context length") != std::string::npos ||
           lower.find("maximum context") != std::string::npos;
}

Outcome classify(const httplib::Result& res) {
    using Kind = GatewayError::Kind;
    Outcome out;
    if (!res) {
        out.retryable = true;
        out.error.emplace(Kind::network, "request failed: " + httplib::to_string(res.error()));
        return out;
    }
    const int status = res->status;
    const std::string status_text = "HTTP " + std::to_string(status);
    if (status == 200) {
        try {
            auto doc = json::parse(res->body);
            out.text = doc.at("choices").at(0).at("text").get<std::string>();
        } catch (const json::exception& e) {
            out.error.emplace(Kind::protocol, std::string("malformed completion response: ") + e.what());
        }
        return out;
    }
    if (status == 401 || status == 403) {
        out.error.emplace(Kind::authentication, status_text + ": credential rejected");
        return out;
    }
    if ((status == 400 || status == 413 || status == 422) && mentions_context_length(res->body)) {
        out.error.emplace(Kind::context_length, status_text + ": prompt exceeds the context length");
        return out;
    }
    if (status == 429 || status >= 500) {
        out.retryable = true;
        out.error.emplace(Kind::network, status_text);
        if (res->has_header("Retry-After")) {
            const auto value = res->get_header_value("Retry-After");
            char* end = nullptr;
            const double secs = std::strtod(value.c_str(), &end);
            if (end != value.c_str() && secs >= 0) {
                out.retry_after = std::chrono::milliseconds(static_cast<long>(secs * 1000));
            }
        }
        return out;
    }
    out.error.emplace(Kind::protocol, status_text + ": " + res->body.substr(0, 200));
    return out;
}

}  // namespace

std::chrono::milliseconds RetryPolicy::delay_for(std::size_t attempt) const {
    const double scaled =
        static_cast<double>(initial_delay.count()) * std::pow(multiplier, static_cast<double>(attempt));
    const double capped = std::min(scaled, static_cast<double>(max_delay.count()));
    return std::chrono::milliseconds(static_cast<long>(capped));
}

CompletionClient::CompletionClient(ModelSpec spec) : spec_(std::move(spec)) {
    const auto& url = spec_.endpoint_url;
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw InputError("endpoint URL '" + url + "' has no scheme");
    }
    const auto path_start = url.find('/', scheme_end + 3);
    origin_ = url.substr(0, path_start);
    path_ = path_start == std::string::npos ? "/" : url.substr(path_start);
}

void CompletionClient::wait_for_slot() {
    if (spec_.rate_limit <= 0.0) return;
    const auto interval = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
        std::chrono::duration<double>(1.0 / spec_.rate_limit));
    std::chrono::steady_clock::time_point slot;
    {
        std::lock_guard lock(slot_mutex_);
        const auto now = std::chrono::steady_clock::now();
        slot = std::max(now, next_slot_);
        next_slot_ = slot + interval;
    }
    std::this_thread::sleep_until(slot);
}

std::string CompletionClient::complete(std::string_view prompt) {
    json body = {
        {"model", spec_.model_name},
        {"prompt", std::string(prompt)},
        {"max_tokens", spec_.params.max_tokens},
        {"temperature", spec_.params.temperature},
        {"stop", spec_.params.stop},
    };
    const auto payload = body.dump();

    httplib::Headers headers;
    if (const char* key = std::getenv(spec_.api_key_env.c_str()); key && *key) {
        headers.emplace("Authorization", std::string("Bearer ") + key);
    }

    for (std::size_t attempt = 0;; ++attempt) {
        wait_for_slot();
        httplib::Client client(origin_);
        client.set_connection_timeout(spec_.timeout);
        client.set_read_timeout(spec_.timeout);
        client.set_write_timeout(spec_.timeout);
        ++requests_;
        auto outcome = classify(client.Post(path_, headers, payload, "application/json"));
        if (outcome.text) return *outcome.text;
        if (!outcome.retryable || attempt >= spec_.retry.max_retries) {
            if (outcome.retryable) {
                throw GatewayError(GatewayError::Kind::network,
                                   outcome.error->what() + std::string(" after ") +
                                       std::to_string(attempt + 1) + " attempts");
            }
            throw *outcome.error;
        }
        auto delay = spec_.retry.delay_for(attempt);
        if (outcome.retry_after) delay = std::min(*outcome.retry_after, spec_.retry.max_delay);
        std::this_thread::sleep_for(delay);
    }
}

}  // namespace iclprobe
