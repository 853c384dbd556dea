#include "llm.hpp"

namespace covagent {

namespace fs = std::filesystem;

long long estimate_tokens(std::string_view text) {
  return static_cast<long long>((text.size() + 3) / 4);
}

std::string ToolSchema::canonical_text() const {
  Json params_json = Json::array();
  for (const ToolParam& param : params) {
    params_json.push_back(Json{{"name", param.name},
                               {"type", param.type},
                               {"description", param.description},
                               {"required", param.required}});
  }
  return Json{{"name", name}, {"description", description}, {"params", params_json}}.dump();
}

void check_chat_preconditions(const std::vector<Message>& messages) {
  if (messages.empty()) {
    fail(ErrorKind::Invalid, "chat requires a non-empty message list");
  }
  if (messages.front().role != Role::System) {
    fail(ErrorKind::Invalid, "chat requires the first message to be the system prompt");
  }
}

namespace {

std::string apply_substitutions(std::string text,
                                const std::map<std::string, std::string>& substitutions) {
  for (const auto& [key, value] : substitutions) {
    std::size_t pos = 0;
    while ((pos = text.find(key, pos)) != std::string::npos) {
      text.replace(pos, key.size(), value);
      pos += value.size();
    }
  }
  return text;
}

}  // namespace

ScriptedBackend::ScriptedBackend(std::vector<ScriptEntry> entries) : entries_(std::move(entries)) {
  if (entries_.empty()) {
    fail(ErrorKind::Script, "scripted backend requires at least one turn");
  }
}

ScriptedBackend ScriptedBackend::load(const fs::path& path,
                                      const std::map<std::string, std::string>& substitutions) {
  std::string text = read_text_file(path);
  Json value = Json::parse(text, nullptr, false);
  if (value.is_discarded()) {
    fail(ErrorKind::Script, path.string() + ": not valid JSON");
  }
  if (!value.is_array()) {
    fail(ErrorKind::Script, path.string() + ": script must be a JSON array of turns");
  }
  std::vector<ScriptEntry> entries;
  std::size_t index = 0;
  for (const Json& turn : value) {
    ++index;
    std::string where = path.string() + " turn " + std::to_string(index);
    if (!turn.is_object()) {
      fail(ErrorKind::Script, where + ": turn must be an object");
    }
    ScriptEntry entry;
    entry.assistant_text =
        apply_substitutions(turn.value("assistant_text", std::string()), substitutions);
    if (turn.contains("tool_calls")) {
      std::size_t call_index = 0;
      for (const Json& call : turn.at("tool_calls")) {
        ++call_index;
        if (!call.contains("name")) {
          fail(ErrorKind::Script, where + ": tool call " + std::to_string(call_index) +
                                      " has no name");
        }
        std::string id = call.value("id", "call_" + std::to_string(index) + "_" +
                                              std::to_string(call_index));
        std::string arguments;
        if (call.contains("arguments")) {
          const Json& args = call.at("arguments");
          arguments = args.is_string() ? args.get<std::string>() : args.dump();
        } else {
          arguments = "{}";
        }
        entry.tool_calls.push_back(ToolCall::make(
            id, call.at("name").get<std::string>(), apply_substitutions(arguments, substitutions)));
      }
    }
    if (!turn.contains("usage")) {
      fail(ErrorKind::Script, where + ": missing usage");
    }
    const Json& usage = turn.at("usage");
    entry.usage.input_tokens = usage.value("input", 0LL);
    entry.usage.output_tokens = usage.value("output", 0LL);
    entry.usage.reasoning_tokens = usage.value("reasoning", 0LL);
    if (entry.usage.input_tokens < 0 || entry.usage.output_tokens < 0 ||
        entry.usage.reasoning_tokens < 0) {
      fail(ErrorKind::Script, where + ": usage components must be non-negative");
    }
    entries.push_back(std::move(entry));
  }
  return ScriptedBackend(std::move(entries));
}

std::map<std::string, std::string> ScriptedBackend::substitutions_for(const RunConfig& config) {
  std::map<std::string, std::string> substitutions;
  substitutions["{spec_path}"] = config.spec_path.string();
  substitutions["{workspace}"] = config.workspace_dir.string();
  if (!config.design_paths.empty()) {
    substitutions["{design_path}"] = config.design_paths.front().string();
  }
  for (std::size_t i = 0; i < config.design_paths.size(); ++i) {
    substitutions["{design_path:" + std::to_string(i) + "}"] = config.design_paths[i].string();
  }
  return substitutions;
}

std::pair<Message, Usage> ScriptedBackend::chat(const std::vector<Message>& messages,
                                               const std::vector<ToolSchema>& tools,
                                               const ChatParams& params) {
  (void)tools;
  (void)params;
  check_chat_preconditions(messages);
  if (cursor_ >= entries_.size()) {
    fail(ErrorKind::Script, "script exhausted after " + std::to_string(entries_.size()) +
                                " turns; the run requested another LLM call");
  }
  const ScriptEntry& entry = entries_[cursor_];
  ++cursor_;
  Message message;
  message.role = Role::Assistant;
  message.content = entry.assistant_text;
  message.tool_calls = entry.tool_calls;
  message.tag = MessageTag::Other;
  return {message, entry.usage};
}

}  // namespace covagent
