#pragma once

#include "herald/events.hpp"

#include <deque>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace herald {

// Endpoint descriptor for a chat-completions-compatible HTTP service, or a
// replay file for hermetic runs. The API key is read from the environment
// variable named by `key_env` and never logged.
struct EndpointConfig {
    enum class Mode { Http, Replay };
    Mode mode = Mode::Replay;
    std::string url;   // e.g. http://127.0.0.1:8081/v1/chat/completions
    std::string model = "default";
    std::string key_env = "LLM_API_KEY";
    double timeout_s = 30.0;
    int max_inflight = 4;
    double temperature = 0.0;
    std::string replay_path;
};

struct LlmResult {
    bool ok = false;
    std::string text;
    std::vector<double> token_logprobs; // empty when the endpoint returns none
    std::string error;
};

// Replay files are JSONL; entries match either by prompt hash or in file
// order, with an optional catch-all:
//   {"prompt_hash":"<hex16>","response":"...","logprobs":[...]}
//   {"seq":0,"response":"..."}            (consumed in order of appearance)
//   {"default":true,"response":"..."}
class LlmClient {
public:
    explicit LlmClient(EndpointConfig config);

    // Safe to call concurrently in http mode; replay lookups are serialized.
    LlmResult complete(const std::string &prompt);

    static std::string prompt_hash(const std::string &prompt);

    const EndpointConfig &config() const { return config_; }

private:
    LlmResult complete_http(const std::string &prompt);
    LlmResult complete_replay(const std::string &prompt);

    EndpointConfig config_;
    std::map<std::string, json> by_hash_;
    std::deque<json> sequence_;
    std::optional<json> default_entry_;
    std::mutex replay_mutex_;
};

} // namespace herald
