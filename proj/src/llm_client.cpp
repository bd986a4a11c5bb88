#include "herald/llm_client.hpp"

#include "herald/util.hpp"

#include <httplib.h>

#include <cstdlib>

namespace herald {

namespace {

LlmResult entry_to_result(const json &entry) {
    LlmResult res;
    res.ok = true;
    res.text = entry.at("response").get<std::string>();
    if (entry.contains("logprobs"))
        for (const auto &lp : entry["logprobs"]) res.token_logprobs.push_back(lp.get<double>());
    return res;
}

// Splits "http://host:port/path" into a client base and a request path.
bool split_url(const std::string &url, std::string &base, std::string &path) {
    size_t scheme = url.find("://");
    if (scheme == std::string::npos) return false;
    size_t slash = url.find('/', scheme + 3);
    if (slash == std::string::npos) {
        base = url;
        path = "/";
    } else {
        base = url.substr(0, slash);
        path = url.substr(slash);
    }
    return true;
}

} // namespace

LlmClient::LlmClient(EndpointConfig config) : config_(std::move(config)) {
    if (config_.mode == EndpointConfig::Mode::Replay && !config_.replay_path.empty()) {
        EventLog entries = EventLog::load(config_.replay_path);
        entries.for_each([&](const json &entry) {
            if (entry.contains("prompt_hash")) {
                by_hash_[entry["prompt_hash"].get<std::string>()] = entry;
            } else if (entry.contains("default") && entry["default"].get<bool>()) {
                default_entry_ = entry;
            } else {
                sequence_.push_back(entry);
            }
        });
    }
}

std::string LlmClient::prompt_hash(const std::string &prompt) {
    return to_hex(fnv1a64(prompt));
}

LlmResult LlmClient::complete(const std::string &prompt) {
    return config_.mode == EndpointConfig::Mode::Http ? complete_http(prompt)
                                                      : complete_replay(prompt);
}

LlmResult LlmClient::complete_replay(const std::string &prompt) {
    std::lock_guard<std::mutex> lock(replay_mutex_);
    auto it = by_hash_.find(prompt_hash(prompt));
    if (it != by_hash_.end()) return entry_to_result(it->second);
    if (!sequence_.empty()) {
        json entry = sequence_.front();
        sequence_.pop_front();
        return entry_to_result(entry);
    }
    if (default_entry_) return entry_to_result(*default_entry_);
    return {false, "", {}, "no replay entry for prompt"};
}

LlmResult LlmClient::complete_http(const std::string &prompt) {
    std::string base, path;
    if (!split_url(config_.url, base, path)) return {false, "", {}, "bad endpoint url"};

    httplib::Client client(base);
    client.set_connection_timeout(static_cast<int>(config_.timeout_s), 0);
    client.set_read_timeout(static_cast<int>(config_.timeout_s), 0);

    httplib::Headers headers;
    if (!config_.key_env.empty()) {
        if (const char *key = std::getenv(config_.key_env.c_str()))
            headers.emplace("Authorization", std::string("Bearer ") + key);
    }

    json body;
    body["model"] = config_.model;
    body["messages"] = json::array({{{"role", "user"}, {"content", prompt}}});
    body["temperature"] = config_.temperature;

    auto resp = client.Post(path, headers, body.dump(), "application/json");
    if (!resp) return {false, "", {}, "transport error: " + httplib::to_string(resp.error())};
    if (resp->status != 200)
        return {false, "", {}, "http status " + std::to_string(resp->status)};

    try {
        json parsed = json::parse(resp->body);
        const json &choice = parsed.at("choices").at(0);
        LlmResult res;
        res.ok = true;
        res.text = choice.at("message").at("content").get<std::string>();
        if (choice.contains("logprobs") && choice["logprobs"].is_object() &&
            choice["logprobs"].contains("content")) {
            for (const auto &tok : choice["logprobs"]["content"])
                res.token_logprobs.push_back(tok.at("logprob").get<double>());
        }
        return res;
    } catch (const std::exception &e) {
        return {false, "", {}, std::string("malformed completion payload: ") + e.what()};
    }
}

} // namespace herald
