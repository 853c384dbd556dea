#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "ledger.hpp"
#include "state.hpp"
#include "util.hpp"

namespace covagent {

// Approximate token count: ceil(bytes / 4). Documented rough heuristic used
// only for proportional input attribution; monotone in content length.
long long estimate_tokens(std::string_view text);

struct ToolParam {
  std::string name;
  std::string type;
  std::string description;
  bool required = true;
};

// Provider-independent tool declaration; adapters produce their wire format,
// and canonical_text() is the stable serialization used for token estimates.
struct ToolSchema {
  std::string name;
  std::string description;
  std::vector<ToolParam> params;

  std::string canonical_text() const;
};

struct ChatParams {
  std::string model_id;
  double temperature = 0.4;
};

class LlmBackend {
public:
  virtual ~LlmBackend() = default;
  // Requires a non-empty message list starting with a system message.
  // Returns the assistant message and the provider-billed usage.
  virtual std::pair<Message, Usage> chat(const std::vector<Message>& messages,
                                         const std::vector<ToolSchema>& tools,
                                         const ChatParams& params) = 0;
  virtual std::string name() const = 0;
};

void check_chat_preconditions(const std::vector<Message>& messages);

struct ScriptEntry {
  std::string assistant_text;
  std::vector<ToolCall> tool_calls;
  Usage usage;
};

// Deterministic backend replaying a pre-recorded turn script. Scripts are a
// JSON array of {assistant_text, tool_calls, usage{input,output,reasoning}}.
// `substitutions` expands placeholders such as {spec_path} in text and tool
// arguments so scripts stay portable across machines.
class ScriptedBackend final : public LlmBackend {
public:
  explicit ScriptedBackend(std::vector<ScriptEntry> entries);
  static ScriptedBackend load(const std::filesystem::path& path,
                              const std::map<std::string, std::string>& substitutions = {});
  static std::map<std::string, std::string> substitutions_for(const RunConfig& config);

  std::pair<Message, Usage> chat(const std::vector<Message>& messages,
                                 const std::vector<ToolSchema>& tools,
                                 const ChatParams& params) override;
  std::string name() const override { return "scripted"; }

  std::size_t cursor() const { return cursor_; }
  std::size_t size() const { return entries_.size(); }

private:
  std::vector<ScriptEntry> entries_;
  std::size_t cursor_ = 0;
};

struct OpenAiOptions {
  std::string base_url = "https://api.openai.com/v1";
  std::string api_key;
  int max_retries = 3;
  // Base backoff doubles per attempt; tests shrink it to keep retries fast.
  int backoff_ms = 500;
};

// OpenAI-compatible chat-completions client. Retries transient failures
// (HTTP 429/5xx and transport errors) with exponential backoff; auth and
// request errors fail immediately.
class OpenAiBackend final : public LlmBackend {
public:
  explicit OpenAiBackend(OpenAiOptions options);

  std::pair<Message, Usage> chat(const std::vector<Message>& messages,
                                 const std::vector<ToolSchema>& tools,
                                 const ChatParams& params) override;
  std::string name() const override { return "openai"; }

private:
  OpenAiOptions options_;
};

}  // namespace covagent
