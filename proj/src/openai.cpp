// OpenAI-compatible chat-completions adapter. Kept in its own translation
// unit so the header-only HTTP client is compiled exactly once.
#ifdef COVAGENT_HAVE_OPENSSL
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>

#include <chrono>
#include <thread>

#include "llm.hpp"

namespace covagent {

namespace {

struct SplitUrl {
  std::string base;
  std::string prefix;
};

SplitUrl split_url(const std::string& url) {
  std::size_t scheme = url.find("://");
  if (scheme == std::string::npos) {
    fail(ErrorKind::Config, "api base_url must include a scheme: " + url);
  }
  std::size_t path = url.find('/', scheme + 3);
  SplitUrl out;
  if (path == std::string::npos) {
    out.base = url;
  } else {
    out.base = url.substr(0, path);
    out.prefix = url.substr(path);
    while (!out.prefix.empty() && out.prefix.back() == '/') {
      out.prefix.pop_back();
    }
  }
  return out;
}

Json wire_messages(const std::vector<Message>& messages) {
  Json out = Json::array();
  for (const Message& message : messages) {
    Json entry = Json{{"role", to_string(message.role)}, {"content", message.content}};
    if (!message.tool_calls.empty()) {
      Json calls = Json::array();
      for (const ToolCall& call : message.tool_calls) {
        calls.push_back(Json{{"id", call.id},
                             {"type", "function"},
                             {"function", Json{{"name", call.name},
                                               {"arguments", call.arguments_raw}}}});
      }
      entry["tool_calls"] = calls;
    }
    if (!message.tool_call_id.empty()) {
      entry["tool_call_id"] = message.tool_call_id;
    }
    out.push_back(entry);
  }
  return out;
}

Json wire_tools(const std::vector<ToolSchema>& tools) {
  Json out = Json::array();
  for (const ToolSchema& tool : tools) {
    Json properties = Json::object();
    Json required = Json::array();
    for (const ToolParam& param : tool.params) {
      properties[param.name] = Json{{"type", param.type}, {"description", param.description}};
      if (param.required) {
        required.push_back(param.name);
      }
    }
    out.push_back(Json{{"type", "function"},
                       {"function", Json{{"name", tool.name},
                                         {"description", tool.description},
                                         {"parameters", Json{{"type", "object"},
                                                             {"properties", properties},
                                                             {"required", required}}}}}});
  }
  return out;
}

bool retryable_status(int status) {
  return status == 429 || (status >= 500 && status <= 599);
}

}  // namespace

OpenAiBackend::OpenAiBackend(OpenAiOptions options) : options_(std::move(options)) {
  if (options_.api_key.empty()) {
    fail(ErrorKind::Config, "no API key available for the live LLM backend");
  }
}

std::pair<Message, Usage> OpenAiBackend::chat(const std::vector<Message>& messages,
                                              const std::vector<ToolSchema>& tools,
                                              const ChatParams& params) {
  check_chat_preconditions(messages);
  SplitUrl url = split_url(options_.base_url);

  Json body = Json{{"model", params.model_id},
                   {"temperature", params.temperature},
                   {"messages", wire_messages(messages)}};
  if (!tools.empty()) {
    body["tools"] = wire_tools(tools);
  }
  std::string payload = body.dump();

  std::string last_error;
  for (int attempt = 0; attempt <= options_.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(
          std::chrono::milliseconds(static_cast<long long>(options_.backoff_ms) << (attempt - 1)));
    }
    httplib::Client client(url.base);
    if (!client.is_valid()) {
      fail(ErrorKind::Provider, "cannot create HTTP client for " + url.base +
                                    " (https requires TLS support)");
    }
    client.set_connection_timeout(30, 0);
    client.set_read_timeout(600, 0);
    httplib::Headers headers = {{"Authorization", "Bearer " + options_.api_key}};
    httplib::Result res =
        client.Post(url.prefix + "/chat/completions", headers, payload, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (retryable_status(res->status)) {
      last_error = "HTTP " + std::to_string(res->status) + ": " + cap_head_tail(res->body, 500);
      continue;
    }
    if (res->status != 200) {
      fail(ErrorKind::Provider, "chat completion failed with HTTP " + std::to_string(res->status) +
                                    ": " + cap_head_tail(res->body, 1000));
    }

    Json response = Json::parse(res->body, nullptr, false);
    if (response.is_discarded()) {
      fail(ErrorKind::Provider, "chat completion response is not valid JSON");
    }
    if (!response.contains("choices") || response.at("choices").empty()) {
      fail(ErrorKind::Provider, "chat completion response has no choices");
    }
    const Json& wire = response.at("choices").at(0).at("message");

    Message message;
    message.role = Role::Assistant;
    message.tag = MessageTag::Other;
    if (wire.contains("content") && wire.at("content").is_string()) {
      message.content = wire.at("content").get<std::string>();
    }
    if (wire.contains("tool_calls")) {
      for (const Json& call : wire.at("tool_calls")) {
        const Json& function = call.at("function");
        message.tool_calls.push_back(ToolCall::make(
            call.value("id", "call_" + std::to_string(message.tool_calls.size())),
            function.at("name").get<std::string>(),
            function.value("arguments", std::string("{}"))));
      }
    }

    Usage usage;
    if (response.contains("usage") && response.at("usage").is_object()) {
      const Json& wire_usage = response.at("usage");
      usage.input_tokens = wire_usage.value("prompt_tokens", 0LL);
      long long completion = wire_usage.value("completion_tokens", 0LL);
      if (wire_usage.contains("completion_tokens_details") &&
          wire_usage.at("completion_tokens_details").is_object() &&
          wire_usage.at("completion_tokens_details").contains("reasoning_tokens")) {
        usage.reasoning_tokens =
            wire_usage.at("completion_tokens_details").value("reasoning_tokens", 0LL);
      } else {
        usage.flagged = true;
      }
      usage.output_tokens = completion - usage.reasoning_tokens;
      if (usage.output_tokens < 0) {
        usage.output_tokens = 0;
      }
    } else {
      usage.flagged = true;
    }
    return {message, usage};
  }
  fail(ErrorKind::Provider, "chat completion failed after " +
                                std::to_string(options_.max_retries + 1) + " attempts; last: " +
                                last_error);
}

}  // namespace covagent
