#include <chrono>
#include <cstdlib>
#include <stdexcept>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "textrobust/evaluation.hpp"
#include "textrobust/logging.hpp"
#include "textrobust/unicode.hpp"

namespace textrobust {

using nlohmann::json;

void RemoteTargetConfig::validate(int num_classes) const {
    if (endpoint.empty()) throw std::invalid_argument("remote target: empty endpoint");
    if (max_retries < 1) throw std::invalid_argument("remote target: max_retries must be >= 1");
    if (max_in_flight < 1) throw std::invalid_argument("remote target: max_in_flight must be >= 1");
    std::map<std::string, int> seen;
    for (int c = 0; c < num_classes; ++c) {
        const auto it = verbalizers.find(c);
        if (it == verbalizers.end() || it->second.empty()) {
            throw std::invalid_argument("remote target: class " + std::to_string(c) +
                                        " has no verbalizers");
        }
        for (const auto& v : it->second) {
            if (v.empty()) {
                throw std::invalid_argument("remote target: empty verbalizer for class " +
                                            std::to_string(c));
            }
            std::u32string folded = utf8_decode_or_throw(v);
            for (auto& cp : folded) cp = simple_lower(cp);
            const std::string key = utf8_encode(folded);
            const auto [prev, inserted] = seen.emplace(key, c);
            if (!inserted && prev->second != c) {
                throw std::invalid_argument("remote target: verbalizer '" + v +
                                            "' is shared by classes " +
                                            std::to_string(prev->second) + " and " +
                                            std::to_string(c));
            }
        }
    }
}

namespace {

std::string fold_case(const std::string& s) {
    std::u32string scalars = utf8_decode_or_throw(s);
    for (auto& cp : scalars) cp = simple_lower(cp);
    return utf8_encode(scalars);
}

std::string replace_all(std::string s, const std::string& needle, const std::string& value) {
    std::size_t pos = 0;
    while ((pos = s.find(needle, pos)) != std::string::npos) {
        s.replace(pos, needle.size(), value);
        pos += value.size();
    }
    return s;
}

struct EndpointParts {
    std::string base;  // scheme://host:port
    std::string path;
};

EndpointParts split_endpoint(const std::string& endpoint) {
    const auto scheme = endpoint.find("://");
    if (scheme == std::string::npos) {
        throw std::invalid_argument("remote target: endpoint must include a scheme: " + endpoint);
    }
    const auto slash = endpoint.find('/', scheme + 3);
    if (slash == std::string::npos) return {endpoint, "/"};
    return {endpoint.substr(0, slash), endpoint.substr(slash)};
}

}  // namespace

RemoteTarget::RemoteTarget(RemoteTargetConfig config, std::vector<std::string> label_names)
    : config_(std::move(config)), label_names_(std::move(label_names)) {
    config_.validate(static_cast<int>(label_names_.size()));
    if (const char* token = std::getenv(config_.auth_token_env.c_str())) {
        auth_token_ = token;
    }
}

std::string RemoteTarget::build_user_prompt(const std::string& text) const {
    std::string label_list;
    for (std::size_t i = 0; i < label_names_.size(); ++i) {
        if (i > 0) label_list += ", ";
        label_list += label_names_[i];
    }
    std::string prompt = replace_all(config_.prompt_template, "{text}", text);
    return replace_all(prompt, "{label_list}", label_list);
}

std::optional<int> RemoteTarget::parse_label(const std::string& raw) const {
    const std::string folded = fold_case(raw);
    std::size_t best_pos = std::string::npos;
    int best_class = -1;
    bool ambiguous = false;
    for (const auto& [cls, words] : config_.verbalizers) {
        for (const auto& v : words) {
            const auto pos = folded.find(fold_case(v));
            if (pos == std::string::npos) continue;
            if (pos < best_pos) {
                best_pos = pos;
                best_class = cls;
                ambiguous = false;
            } else if (pos == best_pos && cls != best_class) {
                ambiguous = true;
            }
        }
    }
    if (best_class < 0 || ambiguous) return std::nullopt;
    return best_class;
}

Prediction RemoteTarget::predict(const std::string& id, const std::string& text) const {
    (void)id;
    const EndpointParts parts = split_endpoint(config_.endpoint);

    json messages = json::array();
    if (!config_.system_prompt.empty()) {
        messages.push_back(json{{"role", "system"}, {"content", config_.system_prompt}});
    }
    messages.push_back(json{{"role", "user"}, {"content", build_user_prompt(text)}});
    const json body{{"model", config_.model_id},
                    {"messages", messages},
                    {"temperature", 0},
                    {"max_tokens", config_.max_tokens}};
    const std::string body_str = body.dump();

    Prediction pred;
    for (int attempt = 1; attempt <= config_.max_retries; ++attempt) {
        httplib::Client client(parts.base);
        client.set_connection_timeout(std::chrono::duration<double>(config_.timeout_seconds));
        client.set_read_timeout(std::chrono::duration<double>(config_.timeout_seconds));
        httplib::Headers headers;
        if (!auth_token_.empty()) headers.emplace("Authorization", "Bearer " + auth_token_);

        auto res = client.Post(parts.path, headers, body_str, "application/json");
        const bool transport_error = !res;
        const bool retryable_status =
            res && (res->status == 429 || (res->status >= 500 && res->status <= 599));

        if (!transport_error && !retryable_status) {
            if (res->status != 200) {
                pred.raw = "HTTP " + std::to_string(res->status) + ": " + res->body;
                return pred;  // non-retryable failure → parse_failure
            }
            pred.raw = res->body;
            try {
                const json rj = json::parse(res->body);
                const std::string content =
                    rj.at("choices").at(0).at("message").at("content").get<std::string>();
                pred.raw = content;
                pred.label = parse_label(content);
            } catch (const json::exception&) {
                // response kept verbatim in raw; label stays unset
            }
            return pred;
        }

        if (attempt < config_.max_retries) {
            const auto delay =
                std::chrono::milliseconds(config_.backoff_base_ms) * (1LL << (attempt - 1));
            log_info("remote target '" + config_.name + "': attempt " + std::to_string(attempt) +
                     (transport_error ? " transport error" : " HTTP " + std::to_string(res->status)) +
                     ", retrying");
            std::this_thread::sleep_for(delay);
        } else {
            pred.raw = transport_error ? std::string("transport error after retries")
                                       : "HTTP " + std::to_string(res->status) + " after retries";
        }
    }
    return pred;
}

}  // namespace textrobust
