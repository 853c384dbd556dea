#include "sim.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cstdlib>
#include <cstring>
#include <set>
#include <sstream>

namespace covagent {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kLcgMultiplier = 6364136223846793005ULL;
constexpr std::uint64_t kLcgIncrement = 1442695040888963407ULL;

void require_known_keys(const Json& object, const std::set<std::string>& known,
                        const std::string& where, std::string_view origin) {
  for (const auto& [key, value] : object.items()) {
    if (!known.count(key)) {
      fail(ErrorKind::Parse,
           std::string(origin) + ": unknown key '" + key + "' in " + where);
    }
  }
}

}  // namespace

std::uint64_t mask_to_width(std::uint64_t value, int width) {
  if (width >= 64) {
    return value;
  }
  return value & ((1ULL << width) - 1);
}

std::uint64_t Lcg::next(int width) {
  state_ = state_ * kLcgMultiplier + kLcgIncrement;
  return mask_to_width(state_, width);
}

std::string Predicate::describe() const {
  switch (op) {
    case PredicateOp::Eq:
      return "eq(" + signal + ", " + std::to_string(value) + ")";
    case PredicateOp::Range:
      return "range(" + signal + ", " + std::to_string(lo) + ", " + std::to_string(hi) + ")";
    case PredicateOp::Seq: {
      std::string out = "seq(";
      for (std::size_t i = 0; i < steps.size(); ++i) {
        if (i > 0) {
          out += " -> ";
        }
        out += "(" + steps[i].signal + "," + std::to_string(steps[i].value) + ")";
      }
      return out + ")";
    }
  }
  return "?";
}

std::vector<std::string> Predicate::referenced_signals() const {
  std::vector<std::string> out;
  if (op == PredicateOp::Seq) {
    for (const SeqStep& step : steps) {
      if (std::find(out.begin(), out.end(), step.signal) == out.end()) {
        out.push_back(step.signal);
      }
    }
  } else {
    out.push_back(signal);
  }
  return out;
}

DesignManifest DesignManifest::load(const fs::path& path) {
  std::string text = read_text_file(path);
  Json value = Json::parse(text, nullptr, false);
  if (value.is_discarded()) {
    fail(ErrorKind::Parse, path.string() + ": not valid JSON");
  }
  return from_json(value, path.string());
}

DesignManifest DesignManifest::from_json(const Json& value, std::string_view origin) {
  std::string where(origin);
  if (!value.is_object()) {
    fail(ErrorKind::Parse, where + ": manifest must be a JSON object");
  }
  require_known_keys(value, {"name", "inputs", "internals", "points"}, "manifest", origin);
  DesignManifest manifest;
  if (!value.contains("name") || !value.contains("inputs") || !value.contains("points")) {
    fail(ErrorKind::Parse, where + ": manifest requires name, inputs, points");
  }
  manifest.name = value.at("name").get<std::string>();
  if (manifest.name.empty()) {
    fail(ErrorKind::Parse, where + ": manifest name must be non-empty");
  }

  std::set<std::string> signal_names;
  auto check_signal = [&](const std::string& name, int width) {
    if (name.empty()) {
      fail(ErrorKind::Parse, where + ": signal name must be non-empty");
    }
    if (width < 1 || width > 64) {
      fail(ErrorKind::Parse,
           where + ": signal '" + name + "' width must be in [1, 64], got " + std::to_string(width));
    }
    if (!signal_names.insert(name).second) {
      fail(ErrorKind::Parse, where + ": duplicate signal name '" + name + "'");
    }
  };

  for (const Json& entry : value.at("inputs")) {
    require_known_keys(entry, {"name", "width"}, "input", origin);
    SignalDecl decl;
    decl.name = entry.at("name").get<std::string>();
    decl.width = entry.value("width", 1);
    check_signal(decl.name, decl.width);
    manifest.inputs.push_back(decl);
  }
  if (manifest.inputs.empty()) {
    fail(ErrorKind::Parse, where + ": manifest requires at least one input");
  }

  if (value.contains("internals")) {
    for (const Json& entry : value.at("internals")) {
      require_known_keys(entry, {"name", "width", "kind", "value"}, "internal", origin);
      InternalDecl decl;
      decl.name = entry.at("name").get<std::string>();
      decl.width = entry.value("width", 1);
      std::string kind = entry.at("kind").get<std::string>();
      if (kind == "tied") {
        decl.kind = InternalKind::Tied;
      } else if (kind == "counter") {
        decl.kind = InternalKind::Counter;
      } else {
        fail(ErrorKind::Parse, where + ": internal '" + decl.name + "' has unknown kind '" + kind +
                                   "' (expected 'tied' or 'counter')");
      }
      decl.value = entry.value("value", 0ULL);
      check_signal(decl.name, decl.width);
      if (decl.value != mask_to_width(decl.value, decl.width)) {
        fail(ErrorKind::Parse, where + ": internal '" + decl.name + "' value does not fit width " +
                                   std::to_string(decl.width));
      }
      manifest.internals.push_back(decl);
    }
  }

  std::set<std::string> point_ids;
  for (const Json& entry : value.at("points")) {
    require_known_keys(entry, {"id", "kind", "predicate", "flags"}, "point", origin);
    ManifestPoint point;
    point.id = entry.at("id").get<std::string>();
    if (point.id.empty() || !point_ids.insert(point.id).second) {
      fail(ErrorKind::Parse, where + ": duplicate or empty point id '" + point.id + "'");
    }
    std::string kind = entry.value("kind", std::string("functional"));
    std::optional<PointKind> parsed_kind = point_kind_from(kind);
    if (!parsed_kind) {
      fail(ErrorKind::Parse, where + ": point '" + point.id + "' has unknown kind '" + kind + "'");
    }
    point.kind = *parsed_kind;

    const Json& predicate = entry.at("predicate");
    std::string op = predicate.at("op").get<std::string>();
    if (op == "eq") {
      require_known_keys(predicate, {"op", "signal", "value"}, "predicate", origin);
      point.predicate.op = PredicateOp::Eq;
      point.predicate.signal = predicate.at("signal").get<std::string>();
      point.predicate.value = predicate.at("value").get<std::uint64_t>();
    } else if (op == "range") {
      require_known_keys(predicate, {"op", "signal", "lo", "hi"}, "predicate", origin);
      point.predicate.op = PredicateOp::Range;
      point.predicate.signal = predicate.at("signal").get<std::string>();
      point.predicate.lo = predicate.at("lo").get<std::uint64_t>();
      point.predicate.hi = predicate.at("hi").get<std::uint64_t>();
      if (point.predicate.lo > point.predicate.hi) {
        fail(ErrorKind::Parse, where + ": point '" + point.id + "' has empty range");
      }
    } else if (op == "seq") {
      require_known_keys(predicate, {"op", "steps"}, "predicate", origin);
      point.predicate.op = PredicateOp::Seq;
      for (const Json& step : predicate.at("steps")) {
        require_known_keys(step, {"signal", "value"}, "seq step", origin);
        point.predicate.steps.push_back(
            SeqStep{step.at("signal").get<std::string>(), step.at("value").get<std::uint64_t>()});
      }
      if (point.predicate.steps.empty()) {
        fail(ErrorKind::Parse, where + ": point '" + point.id + "' has an empty sequence");
      }
    } else {
      fail(ErrorKind::Parse, where + ": point '" + point.id + "' has unknown predicate op '" + op +
                                 "' (expected eq, range, or seq)");
    }
    for (const std::string& signal : point.predicate.referenced_signals()) {
      if (!signal_names.count(signal)) {
        fail(ErrorKind::Parse,
             where + ": point '" + point.id + "' references undeclared signal '" + signal + "'");
      }
    }
    if (entry.contains("flags")) {
      for (const Json& flag : entry.at("flags")) {
        std::string name = flag.get<std::string>();
        if (name != "dead" && name != "default") {
          fail(ErrorKind::Parse, where + ": point '" + point.id + "' has unknown flag '" + name +
                                     "' (expected 'dead' or 'default')");
        }
        point.flags.insert(name);
      }
    }
    manifest.points.push_back(point);
  }
  if (manifest.points.empty()) {
    fail(ErrorKind::Parse, where + ": manifest requires at least one point");
  }
  return manifest;
}

CoverageDatabase DesignManifest::universe() const {
  CoverageDatabase db;
  for (const ManifestPoint& point : points) {
    db.add_point(CoveragePoint{point.id, point.kind, 0});
  }
  return db;
}

const SignalDecl* DesignManifest::find_input(const std::string& name) const {
  for (const SignalDecl& decl : inputs) {
    if (decl.name == name) {
      return &decl;
    }
  }
  return nullptr;
}

const InternalDecl* DesignManifest::find_internal(const std::string& name) const {
  for (const InternalDecl& decl : internals) {
    if (decl.name == name) {
      return &decl;
    }
  }
  return nullptr;
}

const ManifestPoint* DesignManifest::find_point(const std::string& id) const {
  for (const ManifestPoint& point : points) {
    if (point.id == id) {
      return &point;
    }
  }
  return nullptr;
}

StimulusScript StimulusScript::parse(std::string_view text, std::string_view origin) {
  StimulusScript script;
  std::vector<std::string> lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    int line_no = static_cast<int>(i + 1);
    std::string line = trim(lines[i]);
    if (line.empty() || line[0] == '#') {
      continue;
    }
    std::vector<std::string> fields = split_fields(line);
    Directive directive;
    directive.line = line_no;
    if (fields[0] == "drive") {
      directive.kind = Directive::Kind::Drive;
      if (fields.size() < 2) {
        fail(ErrorKind::Parse, std::string(origin) + " line " + std::to_string(line_no) +
                                   ": drive requires at least one <signal>=<value> assignment");
      }
      for (std::size_t f = 1; f < fields.size(); ++f) {
        std::size_t eq = fields[f].find('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 >= fields[f].size()) {
          fail(ErrorKind::Parse, std::string(origin) + " line " + std::to_string(line_no) +
                                     ": malformed assignment '" + fields[f] +
                                     "' (expected <signal>=<value>)");
        }
        std::string name = fields[f].substr(0, eq);
        unsigned long long value = 0;
        if (!parse_uint64(fields[f].substr(eq + 1), value)) {
          fail(ErrorKind::Parse, std::string(origin) + " line " + std::to_string(line_no) +
                                     ": invalid value in '" + fields[f] + "'");
        }
        directive.assigns.emplace_back(name, value);
      }
    } else if (fields[0] == "random") {
      directive.kind = Directive::Kind::Random;
      long long count = 0;
      if (fields.size() != 2 || !parse_long_long(fields[1], count) || count < 1) {
        fail(ErrorKind::Parse, std::string(origin) + " line " + std::to_string(line_no) +
                                   ": random requires a positive vector count");
      }
      directive.count = count;
    } else {
      fail(ErrorKind::Parse, std::string(origin) + " line " + std::to_string(line_no) +
                                 ": unknown directive '" + fields[0] +
                                 "' (expected 'drive' or 'random')");
    }
    script.directives.push_back(std::move(directive));
  }
  return script;
}

long long StimulusScript::total_vectors() const {
  long long total = 0;
  for (const Directive& directive : directives) {
    total += directive.kind == Directive::Kind::Drive ? 1 : directive.count;
  }
  return total;
}

std::vector<std::string> validate_script(const DesignManifest& manifest,
                                         const StimulusScript& script) {
  std::vector<std::string> errors;
  for (const StimulusScript::Directive& directive : script.directives) {
    if (directive.kind != StimulusScript::Directive::Kind::Drive) {
      continue;
    }
    for (const auto& [name, value] : directive.assigns) {
      if (manifest.find_input(name)) {
        continue;
      }
      if (manifest.find_internal(name)) {
        errors.push_back("line " + std::to_string(directive.line) + ": signal '" + name +
                         "' is internal to the design and cannot be driven");
      } else {
        errors.push_back("line " + std::to_string(directive.line) + ": unknown signal '" + name +
                         "'");
      }
    }
  }
  return errors;
}

MockSimulator::MockSimulator(DesignManifest manifest, long long max_vectors)
    : manifest_(std::move(manifest)), max_vectors_(max_vectors) {}

CompileResult MockSimulator::compile(const fs::path& tb_path) {
  CompileResult result;
  std::string text;
  try {
    text = read_text_file(tb_path);
  } catch (const Error& e) {
    result.log = e.what();
    return result;
  }
  StimulusScript script;
  try {
    script = StimulusScript::parse(text, tb_path.filename().string());
  } catch (const Error& e) {
    result.log = e.what();
    return result;
  }
  std::vector<std::string> errors = validate_script(manifest_, script);
  if (!errors.empty()) {
    std::string log = "stimulus does not bind to design '" + manifest_.name + "':";
    for (const std::string& error : errors) {
      log += "\n  " + error;
    }
    result.log = log;
    return result;
  }
  result.ok = true;
  result.log = "compiled stimulus for '" + manifest_.name + "': " +
               std::to_string(script.directives.size()) + " directives, " +
               std::to_string(script.total_vectors()) + " vectors planned";
  compiled_ = std::move(script);
  return result;
}

SimResult MockSimulator::simulate(long long seed, const fs::path& out_path) {
  ++simulate_calls_;
  SimResult result;
  if (!compiled_) {
    result.log = "no compiled stimulus script; run compile first";
    return result;
  }
  long long planned = compiled_->total_vectors();
  if (planned > max_vectors_) {
    result.timed_out = true;
    result.log = "simulation exceeded the vector budget: planned " + std::to_string(planned) +
                 " vectors, cap is " + std::to_string(max_vectors_);
    return result;
  }

  // Expand directives into per-vector values for every declared signal.
  Lcg rng(static_cast<std::uint64_t>(seed));
  std::map<std::string, std::uint64_t> inputs;
  for (const SignalDecl& decl : manifest_.inputs) {
    inputs[decl.name] = 0;
  }
  std::vector<std::map<std::string, std::uint64_t>> vectors;
  vectors.reserve(static_cast<std::size_t>(planned));
  auto emit = [&](long long index) {
    std::map<std::string, std::uint64_t> env = inputs;
    for (const InternalDecl& decl : manifest_.internals) {
      if (decl.kind == InternalKind::Tied) {
        env[decl.name] = decl.value;
      } else {
        env[decl.name] =
            mask_to_width(decl.value + static_cast<std::uint64_t>(index), decl.width);
      }
    }
    vectors.push_back(std::move(env));
  };
  for (const StimulusScript::Directive& directive : compiled_->directives) {
    if (directive.kind == StimulusScript::Directive::Kind::Drive) {
      for (const auto& [name, value] : directive.assigns) {
        inputs[name] = mask_to_width(value, manifest_.find_input(name)->width);
      }
      emit(static_cast<long long>(vectors.size()));
    } else {
      for (long long i = 0; i < directive.count; ++i) {
        for (const SignalDecl& decl : manifest_.inputs) {
          inputs[decl.name] = rng.next(decl.width);
        }
        emit(static_cast<long long>(vectors.size()));
      }
    }
  }

  CoverageDatabase db = manifest_.universe();
  for (const ManifestPoint& point : manifest_.points) {
    long long hits = 0;
    const Predicate& predicate = point.predicate;
    if (predicate.op == PredicateOp::Seq) {
      std::size_t len = predicate.steps.size();
      for (std::size_t t = 0; t + len <= vectors.size(); ++t) {
        bool match = true;
        for (std::size_t j = 0; j < len; ++j) {
          if (vectors[t + j].at(predicate.steps[j].signal) != predicate.steps[j].value) {
            match = false;
            break;
          }
        }
        if (match) {
          ++hits;
        }
      }
    } else {
      for (const auto& env : vectors) {
        std::uint64_t observed = env.at(predicate.signal);
        bool match = predicate.op == PredicateOp::Eq
                         ? observed == predicate.value
                         : observed >= predicate.lo && observed <= predicate.hi;
        if (match) {
          ++hits;
        }
      }
    }
    if (hits > 0) {
      db.add_hits(point.id, hits);
    }
  }

  std::error_code ec;
  fs::create_directories(out_path.parent_path(), ec);
  snapshot(db, out_path);
  result.ok = true;
  result.coverage_path = out_path;
  result.log = "seed " + std::to_string(seed) + ": " + std::to_string(vectors.size()) +
               " vectors simulated, " + std::to_string(db.covered_count()) + "/" +
               std::to_string(db.size()) + " points hit";
  return result;
}

SourceIndex MockSimulator::source_index() const {
  SourceIndex index;
  for (const ManifestPoint& point : manifest_.points) {
    std::string text = point.predicate.describe();
    for (const std::string& flag : point.flags) {
      text += " [" + flag + "]";
    }
    index.annotate(point.id, text);
  }
  return index;
}

ExecResult run_command(const std::string& command, double timeout_seconds) {
  int pipe_fds[2];
  if (pipe(pipe_fds) != 0) {
    fail(ErrorKind::Io, "pipe failed: " + std::string(std::strerror(errno)));
  }
  pid_t pid = fork();
  if (pid < 0) {
    close(pipe_fds[0]);
    close(pipe_fds[1]);
    fail(ErrorKind::Io, "fork failed: " + std::string(std::strerror(errno)));
  }
  if (pid == 0) {
    setpgid(0, 0);
    dup2(pipe_fds[1], STDOUT_FILENO);
    dup2(pipe_fds[1], STDERR_FILENO);
    close(pipe_fds[0]);
    close(pipe_fds[1]);
    execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  close(pipe_fds[1]);

  ExecResult result;
  auto deadline = std::chrono::steady_clock::now() +
                  std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                      std::chrono::duration<double>(timeout_seconds));
  char buffer[4096];
  while (true) {
    auto remaining = deadline - std::chrono::steady_clock::now();
    long long remaining_ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(remaining).count();
    if (remaining_ms <= 0) {
      result.timed_out = true;
      break;
    }
    pollfd pfd{pipe_fds[0], POLLIN, 0};
    int polled = poll(&pfd, 1, static_cast<int>(std::min(remaining_ms, 1000LL)));
    if (polled < 0) {
      if (errno == EINTR) {
        continue;
      }
      break;
    }
    if (polled == 0) {
      continue;
    }
    ssize_t n = read(pipe_fds[0], buffer, sizeof(buffer));
    if (n <= 0) {
      break;
    }
    result.output.append(buffer, static_cast<std::size_t>(n));
  }
  if (result.timed_out) {
    kill(-pid, SIGKILL);
  }
  close(pipe_fds[0]);
  int status = 0;
  waitpid(pid, &status, 0);
  if (result.timed_out) {
    result.exit_code = -1;
  } else if (WIFEXITED(status)) {
    result.exit_code = WEXITSTATUS(status);
  } else if (WIFSIGNALED(status)) {
    result.exit_code = 128 + WTERMSIG(status);
  }
  return result;
}

namespace {

std::string substitute_template(std::string text,
                                const std::vector<std::pair<std::string, std::string>>& subs) {
  for (const auto& [key, value] : subs) {
    std::size_t pos = 0;
    while ((pos = text.find(key, pos)) != std::string::npos) {
      text.replace(pos, key.size(), value);
      pos += value.size();
    }
  }
  return text;
}

// Returns the command's first token when no executable by that name exists.
std::optional<std::string> missing_executable(const std::string& command) {
  std::vector<std::string> fields = split_fields(command);
  if (fields.empty()) {
    return std::string("(empty command)");
  }
  const std::string& token = fields[0];
  if (token.find('/') != std::string::npos) {
    return access(token.c_str(), X_OK) == 0 ? std::nullopt : std::optional<std::string>(token);
  }
  const char* path_env = std::getenv("PATH");
  std::string path = path_env ? path_env : "";
  std::size_t start = 0;
  while (start <= path.size()) {
    std::size_t end = path.find(':', start);
    std::string dir = path.substr(start, end == std::string::npos ? std::string::npos : end - start);
    if (!dir.empty() && access((dir + "/" + token).c_str(), X_OK) == 0) {
      return std::nullopt;
    }
    if (end == std::string::npos) {
      break;
    }
    start = end + 1;
  }
  return token;
}

}  // namespace

CommandSimulator::CommandSimulator(SimulatorConfig config, std::vector<fs::path> design_paths,
                                   std::string name)
    : config_(std::move(config)), design_paths_(std::move(design_paths)), name_(std::move(name)) {}

CompileResult CommandSimulator::compile(const fs::path& tb_path) {
  CompileResult result;
  std::string designs;
  for (const fs::path& path : design_paths_) {
    if (!designs.empty()) {
      designs += " ";
    }
    designs += path.string();
  }
  std::string command = substitute_template(
      config_.compile_cmd, {{"{tb}", tb_path.string()}, {"{design}", designs}});
  if (std::optional<std::string> missing = missing_executable(command)) {
    result.environment = true;
    result.log = "simulator command not found: '" + *missing + "'";
    return result;
  }
  ExecResult exec = run_command(command, config_.timeout_seconds);
  if (exec.timed_out) {
    result.log = "compile timed out after " + format_fixed(config_.timeout_seconds, 1) +
                 " seconds\n" + exec.output;
    return result;
  }
  if (exec.exit_code != 0) {
    result.log = "compile exited with status " + std::to_string(exec.exit_code) + "\n" + exec.output;
    return result;
  }
  current_tb_ = tb_path;
  result.ok = true;
  result.log = exec.output.empty() ? "compile ok" : exec.output;
  return result;
}

SimResult CommandSimulator::simulate(long long seed, const fs::path& out_path) {
  SimResult result;
  if (current_tb_.empty()) {
    result.log = "no compiled testbench; run compile first";
    return result;
  }
  std::string designs;
  for (const fs::path& path : design_paths_) {
    if (!designs.empty()) {
      designs += " ";
    }
    designs += path.string();
  }
  std::error_code ec;
  fs::create_directories(out_path.parent_path(), ec);
  std::string command = substitute_template(config_.sim_cmd,
                                            {{"{tb}", current_tb_.string()},
                                             {"{design}", designs},
                                             {"{seed}", std::to_string(seed)},
                                             {"{out}", out_path.string()}});
  if (std::optional<std::string> missing = missing_executable(command)) {
    result.log = "simulator command not found: '" + *missing + "'";
    return result;
  }
  ExecResult exec = run_command(command, config_.timeout_seconds);
  if (exec.timed_out) {
    result.timed_out = true;
    result.log = "simulation timed out after " + format_fixed(config_.timeout_seconds, 1) +
                 " seconds (seed " + std::to_string(seed) + ")\n" + exec.output;
    return result;
  }
  if (exec.exit_code != 0) {
    result.log = "simulation exited with status " + std::to_string(exec.exit_code) + " (seed " +
                 std::to_string(seed) + ")\n" + exec.output;
    return result;
  }
  if (!fs::exists(out_path)) {
    result.log = "simulator produced no coverage output at " + out_path.string();
    return result;
  }
  try {
    // Normalize whatever the simulator wrote into a canonical snapshot.
    CoverageDatabase db = parse_coverage_file(out_path, config_.coverage_format);
    snapshot(db, out_path);
  } catch (const Error& e) {
    result.log = std::string("coverage output unparseable: ") + e.what();
    return result;
  }
  result.ok = true;
  result.coverage_path = out_path;
  result.log = exec.output.empty()
                   ? "simulation ok (seed " + std::to_string(seed) + ")"
                   : exec.output;
  return result;
}

SourceIndex CommandSimulator::source_index() const {
  SourceIndex index;
  for (const fs::path& path : design_paths_) {
    try {
      index.add_file(path.string(), read_text_file(path));
    } catch (const Error&) {
      // A missing design file degrades feedback to "<source unavailable>"
      // rather than failing the run.
    }
  }
  return index;
}

}  // namespace covagent
