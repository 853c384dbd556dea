#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "util.hpp"

namespace covagent {

enum class PointKind { Line, Branch, Toggle, Fsm, Functional };

const char* to_string(PointKind kind);
std::optional<PointKind> point_kind_from(std::string_view name);

struct CoveragePoint {
  std::string id;
  PointKind kind = PointKind::Functional;
  long long hits = 0;

  bool covered() const { return hits >= 1; }
};

// Grouping key derived from the point id: "file:line" ids group by file,
// dotted ids group by the prefix before the last dot, bare ids stand alone.
struct PointLocation {
  std::string group;
  std::string file;
  long line = 0;
  bool has_line = false;
};

PointLocation locate_point(const std::string& id);

struct Provenance {
  int iteration = 0;
  int seed = 0;
};

class CoverageDatabase {
public:
  void add_point(CoveragePoint point);
  void add_hits(const std::string& id, long long count);

  const std::map<std::string, CoveragePoint>& points() const { return points_; }
  std::vector<Provenance>& provenance() { return provenance_; }
  const std::vector<Provenance>& provenance() const { return provenance_; }

  bool empty() const { return points_.empty(); }
  std::size_t size() const { return points_.size(); }
  std::size_t covered_count() const;
  double percentage() const;
  std::set<std::string> covered_ids() const;
  std::set<std::string> uncovered_ids() const;

  Json to_json() const;
  static CoverageDatabase from_json(const Json& value);

private:
  std::map<std::string, CoveragePoint> points_;
  std::vector<Provenance> provenance_;
};

enum class CoverageFormat { Canonical, Info, Manifest };

std::optional<CoverageFormat> coverage_format_from(std::string_view name);

// Canonical text format: one `<kind> <id> <hits>` per line, `#` comments and
// blank lines ignored. `origin` names the input in error messages.
CoverageDatabase parse_canonical(std::string_view text, std::string_view origin);
// lcov-style .info: SF/DA/end_of_record; repeated DA entries for one line sum.
CoverageDatabase parse_info(std::string_view text, std::string_view origin);
CoverageDatabase parse_coverage_file(const std::filesystem::path& path, CoverageFormat format);

// Union-merge over an identical point universe. Hit counts sum, provenance
// concatenates in argument order. Mismatched universes raise a merge error
// listing the symmetric difference.
CoverageDatabase merge(const CoverageDatabase& a, const CoverageDatabase& b);

// Snapshot format: `#!provenance <iteration> <seed>` header lines, then
// canonical point lines sorted by id. parse_canonical reads a snapshot back
// (provenance lines are comments to it); load_snapshot also restores
// provenance.
std::string snapshot_text(const CoverageDatabase& db);
void snapshot(const CoverageDatabase& db, const std::filesystem::path& path);
CoverageDatabase load_snapshot(const std::filesystem::path& path);

// Resolves point ids to human-readable source context for feedback messages:
// file-backed points to the named source line, annotated points (mock
// predicates) to their annotation.
class SourceIndex {
public:
  void add_file(const std::string& name, const std::string& content);
  void annotate(const std::string& point_id, const std::string& text);
  std::optional<std::string> lookup(const std::string& point_id) const;
  bool empty() const { return file_lines_.empty() && annotations_.empty(); }

private:
  std::map<std::string, std::vector<std::string>> file_lines_;
  std::map<std::string, std::string> annotations_;
};

// Structured coverage feedback: overall percentage, then uncovered points
// grouped and ordered by descending uncovered count (ties lexicographic),
// at most `limit` points per group. Requires a non-empty database.
std::string feedback(const CoverageDatabase& db, const SourceIndex& sources, int limit);

}  // namespace covagent
