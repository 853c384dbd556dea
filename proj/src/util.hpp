#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace covagent {

// Ordered JSON keeps object keys in insertion order, which makes every
// serialized artifact byte-stable across runs.
using Json = nlohmann::ordered_json;

enum class ErrorKind {
  Config,
  Setup,
  Io,
  Parse,
  Sandbox,
  Provider,
  Script,
  Merge,
  State,
  Environment,
  Invalid,
};

const char* error_kind_name(ErrorKind kind);

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& message);
  ErrorKind kind() const { return kind_; }

private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view content);
// Writes via a sibling temp file and rename so a crash never leaves a
// half-written checkpoint behind.
void write_text_file_atomic(const std::filesystem::path& path, std::string_view content);

// Truncates to the first `cap` characters with an explicit marker naming the
// original size. Returns the input unchanged when it fits.
std::string cap_head(std::string_view text, std::size_t cap);
// Keeps the head and tail halves of oversized text with an omission marker in
// between; used for logs where both the start and the end carry signal.
std::string cap_head_tail(std::string_view text, std::size_t cap);

std::vector<std::string> split_lines(std::string_view text);
std::string first_lines(std::string_view text, int count);
std::string trim(std::string_view text);
std::vector<std::string> split_fields(std::string_view line);

// Fixed-precision formatting helpers; std::to_string on doubles is
// locale-dependent and unstable across platforms.
std::string format_fixed(double value, int decimals);
std::string format_percent(double value);

bool parse_long_long(std::string_view text, long long& out);
bool parse_uint64(std::string_view text, unsigned long long& out);

}  // namespace covagent
