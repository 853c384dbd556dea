#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "coverage.hpp"
#include "state.hpp"
#include "util.hpp"

namespace covagent {

struct SignalDecl {
  std::string name;
  int width = 1;
};

// Internal signals are not drivable by stimulus. `Tied` internals hold a
// constant; `Counter` internals advance by one per stimulus vector.
enum class InternalKind { Tied, Counter };

struct InternalDecl {
  std::string name;
  int width = 1;
  InternalKind kind = InternalKind::Tied;
  std::uint64_t value = 0;
};

enum class PredicateOp { Eq, Range, Seq };

struct SeqStep {
  std::string signal;
  std::uint64_t value = 0;
};

struct Predicate {
  PredicateOp op = PredicateOp::Eq;
  std::string signal;
  std::uint64_t value = 0;
  std::uint64_t lo = 0;
  std::uint64_t hi = 0;
  std::vector<SeqStep> steps;

  std::string describe() const;
  // Every signal the predicate observes.
  std::vector<std::string> referenced_signals() const;
};

struct ManifestPoint {
  std::string id;
  PointKind kind = PointKind::Functional;
  Predicate predicate;
  std::set<std::string> flags;
};

struct DesignManifest {
  std::string name;
  std::vector<SignalDecl> inputs;
  std::vector<InternalDecl> internals;
  std::vector<ManifestPoint> points;

  static DesignManifest load(const std::filesystem::path& path);
  static DesignManifest from_json(const Json& value, std::string_view origin);

  // All points at zero hits.
  CoverageDatabase universe() const;
  const SignalDecl* find_input(const std::string& name) const;
  const InternalDecl* find_internal(const std::string& name) const;
  const ManifestPoint* find_point(const std::string& id) const;
};

// Stimulus script grammar, one directive per line:
//   drive <signal>=<value> [<signal>=<value> ...]   emit one vector
//   random <count>                                  emit <count> random vectors
// Undriven signals hold their previous value; everything starts at zero.
struct StimulusScript {
  struct Directive {
    enum class Kind { Drive, Random };
    Kind kind = Kind::Drive;
    std::vector<std::pair<std::string, std::uint64_t>> assigns;
    long long count = 0;
    int line = 0;
  };
  std::vector<Directive> directives;

  // Syntax-only parse; signal binding is checked against a manifest by
  // validate_script.
  static StimulusScript parse(std::string_view text, std::string_view origin);
  long long total_vectors() const;
};

std::vector<std::string> validate_script(const DesignManifest& manifest,
                                         const StimulusScript& script);

// 64-bit linear congruential generator; one draw per (vector, input) pair in
// input declaration order makes random stimulus a pure function of the seed.
class Lcg {
public:
  explicit Lcg(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next(int width);

private:
  std::uint64_t state_;
};

std::uint64_t mask_to_width(std::uint64_t value, int width);

struct CompileResult {
  bool ok = false;
  std::string log;
  // Tooling missing rather than testbench broken.
  bool environment = false;
};

struct SimResult {
  bool ok = false;
  std::string log;
  std::filesystem::path coverage_path;
  bool timed_out = false;
};

class SimBackend {
public:
  virtual ~SimBackend() = default;
  virtual CompileResult compile(const std::filesystem::path& tb_path) = 0;
  // Writes a canonical coverage snapshot to `out_path` on success.
  virtual SimResult simulate(long long seed, const std::filesystem::path& out_path) = 0;
  virtual SourceIndex source_index() const = 0;
  virtual std::string design_name() const = 0;
};

class MockSimulator final : public SimBackend {
public:
  explicit MockSimulator(DesignManifest manifest, long long max_vectors = 100000);

  CompileResult compile(const std::filesystem::path& tb_path) override;
  SimResult simulate(long long seed, const std::filesystem::path& out_path) override;
  SourceIndex source_index() const override;
  std::string design_name() const override { return manifest_.name; }

  const DesignManifest& manifest() const { return manifest_; }
  int simulate_calls() const { return simulate_calls_; }

private:
  DesignManifest manifest_;
  long long max_vectors_;
  std::optional<StimulusScript> compiled_;
  int simulate_calls_ = 0;
};

struct ExecResult {
  int exit_code = -1;
  std::string output;
  bool timed_out = false;
};

// Runs `command` through the shell, capturing interleaved stdout/stderr; on
// timeout the whole process group is killed.
ExecResult run_command(const std::string& command, double timeout_seconds);

// Adapter for an external compiler/simulator pair. Commands are templates:
// {tb} = testbench path, {design} = space-joined design paths, {seed} = seed,
// {out} = coverage output path. The simulator's native coverage output is
// normalized to a canonical snapshot at the requested location.
class CommandSimulator final : public SimBackend {
public:
  CommandSimulator(SimulatorConfig config, std::vector<std::filesystem::path> design_paths,
                   std::string name);

  CompileResult compile(const std::filesystem::path& tb_path) override;
  SimResult simulate(long long seed, const std::filesystem::path& out_path) override;
  SourceIndex source_index() const override;
  std::string design_name() const override { return name_; }

private:
  SimulatorConfig config_;
  std::vector<std::filesystem::path> design_paths_;
  std::string name_;
  std::filesystem::path current_tb_;
};

}  // namespace covagent
