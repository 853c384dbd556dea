#include "util.hpp"

#include <cerrno>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace covagent {

namespace fs = std::filesystem;

const char* error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config: return "config";
    case ErrorKind::Setup: return "setup";
    case ErrorKind::Io: return "io";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Sandbox: return "sandbox";
    case ErrorKind::Provider: return "provider";
    case ErrorKind::Script: return "script";
    case ErrorKind::Merge: return "merge";
    case ErrorKind::State: return "state";
    case ErrorKind::Environment: return "environment";
    case ErrorKind::Invalid: return "invalid";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(error_kind_name(kind)) + " error: " + message),
      kind_(kind) {}

void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    fail(ErrorKind::Io, "cannot open file for reading: " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) {
    fail(ErrorKind::Io, "read failed: " + path.string());
  }
  return buffer.str();
}

void write_text_file(const fs::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    fail(ErrorKind::Io, "cannot open file for writing: " + path.string());
  }
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.flush();
  if (!out) {
    fail(ErrorKind::Io, "write failed: " + path.string());
  }
}

void write_text_file_atomic(const fs::path& path, std::string_view content) {
  fs::path tmp = path;
  tmp += ".tmp";
  write_text_file(tmp, content);
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fail(ErrorKind::Io, "cannot replace " + path.string() + ": " + ec.message());
  }
}

std::string cap_head(std::string_view text, std::size_t cap) {
  if (text.size() <= cap) {
    return std::string(text);
  }
  std::string out(text.substr(0, cap));
  out += "\n...[truncated: showing first " + std::to_string(cap) + " of " +
         std::to_string(text.size()) + " characters]";
  return out;
}

std::string cap_head_tail(std::string_view text, std::size_t cap) {
  if (text.size() <= cap) {
    return std::string(text);
  }
  std::size_t head = cap / 2;
  std::size_t tail = cap - head;
  std::string out(text.substr(0, head));
  out += "\n...[" + std::to_string(text.size() - cap) + " characters omitted]...\n";
  out += std::string(text.substr(text.size() - tail));
  return out;
}

std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) {
      if (start < text.size()) {
        lines.emplace_back(text.substr(start));
      }
      break;
    }
    std::string line(text.substr(start, end - start));
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    lines.push_back(std::move(line));
    start = end + 1;
  }
  return lines;
}

std::string first_lines(std::string_view text, int count) {
  std::vector<std::string> lines = split_lines(text);
  std::string out;
  int taken = 0;
  for (const std::string& line : lines) {
    if (taken >= count) {
      break;
    }
    if (!out.empty()) {
      out += '\n';
    }
    out += line;
    ++taken;
  }
  return out;
}

std::string trim(std::string_view text) {
  std::size_t begin = 0;
  std::size_t end = text.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(text[begin]))) {
    ++begin;
  }
  while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1]))) {
    --end;
  }
  return std::string(text.substr(begin, end - begin));
}

std::vector<std::string> split_fields(std::string_view line) {
  std::vector<std::string> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) {
      ++i;
    }
    std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) {
      ++i;
    }
    if (i > start) {
      fields.emplace_back(line.substr(start, i - start));
    }
  }
  return fields;
}

std::string format_fixed(double value, int decimals) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.*f", decimals, value);
  return buffer;
}

std::string format_percent(double value) {
  return format_fixed(value, 2);
}

bool parse_long_long(std::string_view text, long long& out) {
  if (text.empty()) {
    return false;
  }
  errno = 0;
  char* end = nullptr;
  std::string owned(text);
  long long value = std::strtoll(owned.c_str(), &end, 10);
  if (errno != 0 || end != owned.c_str() + owned.size()) {
    return false;
  }
  out = value;
  return true;
}

bool parse_uint64(std::string_view text, unsigned long long& out) {
  if (text.empty() || text[0] == '-') {
    return false;
  }
  errno = 0;
  char* end = nullptr;
  std::string owned(text);
  unsigned long long value = std::strtoull(owned.c_str(), &end, 10);
  if (errno != 0 || end != owned.c_str() + owned.size()) {
    return false;
  }
  out = value;
  return true;
}

}  // namespace covagent
