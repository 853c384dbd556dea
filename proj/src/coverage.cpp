#include "coverage.hpp"

#include <algorithm>
#include <sstream>

namespace covagent {

namespace fs = std::filesystem;

const char* to_string(PointKind kind) {
  switch (kind) {
    case PointKind::Line: return "line";
    case PointKind::Branch: return "branch";
    case PointKind::Toggle: return "toggle";
    case PointKind::Fsm: return "fsm";
    case PointKind::Functional: return "functional";
  }
  return "unknown";
}

std::optional<PointKind> point_kind_from(std::string_view name) {
  if (name == "line") return PointKind::Line;
  if (name == "branch") return PointKind::Branch;
  if (name == "toggle") return PointKind::Toggle;
  if (name == "fsm") return PointKind::Fsm;
  if (name == "functional") return PointKind::Functional;
  return std::nullopt;
}

PointLocation locate_point(const std::string& id) {
  PointLocation loc;
  std::size_t colon = id.rfind(':');
  if (colon != std::string::npos && colon + 1 < id.size()) {
    std::string suffix = id.substr(colon + 1);
    bool digits = std::all_of(suffix.begin(), suffix.end(), [](unsigned char c) {
      return std::isdigit(c) != 0;
    });
    if (digits) {
      loc.file = id.substr(0, colon);
      loc.group = loc.file;
      loc.line = std::stol(suffix);
      loc.has_line = true;
      return loc;
    }
  }
  std::size_t dot = id.rfind('.');
  if (dot != std::string::npos && dot > 0) {
    loc.group = id.substr(0, dot);
  } else {
    loc.group = id;
  }
  return loc;
}

void CoverageDatabase::add_point(CoveragePoint point) {
  if (point.id.empty()) {
    fail(ErrorKind::Invalid, "coverage point id must be non-empty");
  }
  if (point.hits < 0) {
    fail(ErrorKind::Invalid, "coverage point '" + point.id + "' has negative hits");
  }
  auto [it, inserted] = points_.emplace(point.id, point);
  if (!inserted) {
    fail(ErrorKind::Invalid, "duplicate coverage point id '" + point.id + "'");
  }
}

void CoverageDatabase::add_hits(const std::string& id, long long count) {
  auto it = points_.find(id);
  if (it == points_.end()) {
    fail(ErrorKind::Invalid, "unknown coverage point id '" + id + "'");
  }
  it->second.hits += count;
}

std::size_t CoverageDatabase::covered_count() const {
  std::size_t n = 0;
  for (const auto& [id, point] : points_) {
    if (point.covered()) {
      ++n;
    }
  }
  return n;
}

double CoverageDatabase::percentage() const {
  if (points_.empty()) {
    return 0.0;
  }
  return 100.0 * static_cast<double>(covered_count()) / static_cast<double>(points_.size());
}

std::set<std::string> CoverageDatabase::covered_ids() const {
  std::set<std::string> out;
  for (const auto& [id, point] : points_) {
    if (point.covered()) {
      out.insert(id);
    }
  }
  return out;
}

std::set<std::string> CoverageDatabase::uncovered_ids() const {
  std::set<std::string> out;
  for (const auto& [id, point] : points_) {
    if (!point.covered()) {
      out.insert(id);
    }
  }
  return out;
}

Json CoverageDatabase::to_json() const {
  Json points = Json::array();
  for (const auto& [id, point] : points_) {
    points.push_back(Json{{"id", id}, {"kind", to_string(point.kind)}, {"hits", point.hits}});
  }
  Json provenance = Json::array();
  for (const Provenance& p : provenance_) {
    provenance.push_back(Json{{"iteration", p.iteration}, {"seed", p.seed}});
  }
  return Json{{"points", points}, {"provenance", provenance}};
}

CoverageDatabase CoverageDatabase::from_json(const Json& value) {
  CoverageDatabase db;
  for (const Json& entry : value.at("points")) {
    CoveragePoint point;
    point.id = entry.at("id").get<std::string>();
    std::string kind = entry.at("kind").get<std::string>();
    std::optional<PointKind> parsed = point_kind_from(kind);
    if (!parsed) {
      fail(ErrorKind::Parse, "unknown coverage point kind '" + kind + "'");
    }
    point.kind = *parsed;
    point.hits = entry.at("hits").get<long long>();
    db.add_point(point);
  }
  for (const Json& entry : value.at("provenance")) {
    db.provenance_.push_back(Provenance{entry.at("iteration").get<int>(),
                                        entry.at("seed").get<int>()});
  }
  return db;
}

std::optional<CoverageFormat> coverage_format_from(std::string_view name) {
  if (name == "canonical") return CoverageFormat::Canonical;
  if (name == "info") return CoverageFormat::Info;
  if (name == "manifest") return CoverageFormat::Manifest;
  return std::nullopt;
}

CoverageDatabase parse_canonical(std::string_view text, std::string_view origin) {
  CoverageDatabase db;
  std::map<std::string, std::size_t> first_line;
  std::vector<std::string> lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::size_t line_no = i + 1;
    std::string line = trim(lines[i]);
    if (line.empty() || line[0] == '#') {
      continue;
    }
    std::vector<std::string> fields = split_fields(line);
    if (fields.size() != 3) {
      fail(ErrorKind::Parse, std::string(origin) + " line " + std::to_string(line_no) +
                                 ": expected '<kind> <id> <hits>', got '" + line + "'");
    }
    std::optional<PointKind> kind = point_kind_from(fields[0]);
    if (!kind) {
      fail(ErrorKind::Parse, std::string(origin) + " line " + std::to_string(line_no) +
                                 ": unknown kind '" + fields[0] + "'");
    }
    long long hits = 0;
    if (!parse_long_long(fields[2], hits) || hits < 0) {
      fail(ErrorKind::Parse, std::string(origin) + " line " + std::to_string(line_no) +
                                 ": invalid hit count '" + fields[2] + "'");
    }
    auto it = first_line.find(fields[1]);
    if (it != first_line.end()) {
      fail(ErrorKind::Parse, std::string(origin) + " line " + std::to_string(line_no) +
                                 ": duplicate point id '" + fields[1] +
                                 "' (first declared on line " + std::to_string(it->second) + ")");
    }
    first_line.emplace(fields[1], line_no);
    db.add_point(CoveragePoint{fields[1], *kind, hits});
  }
  return db;
}

CoverageDatabase parse_info(std::string_view text, std::string_view origin) {
  CoverageDatabase db;
  std::map<std::string, long long> hits_by_id;
  std::string current_file;
  std::vector<std::string> lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::size_t line_no = i + 1;
    std::string line = trim(lines[i]);
    if (line.empty()) {
      continue;
    }
    if (line.rfind("SF:", 0) == 0) {
      current_file = trim(line.substr(3));
      if (current_file.empty()) {
        fail(ErrorKind::Parse, std::string(origin) + " line " + std::to_string(line_no) +
                                   ": SF record with empty path");
      }
      continue;
    }
    if (line == "end_of_record") {
      current_file.clear();
      continue;
    }
    if (line.rfind("DA:", 0) == 0) {
      if (current_file.empty()) {
        fail(ErrorKind::Parse, std::string(origin) + " line " + std::to_string(line_no) +
                                   ": DA record before any SF record");
      }
      std::string body = line.substr(3);
      std::size_t comma = body.find(',');
      if (comma == std::string::npos) {
        fail(ErrorKind::Parse, std::string(origin) + " line " + std::to_string(line_no) +
                                   ": malformed DA record '" + line + "'");
      }
      std::string line_field = body.substr(0, comma);
      std::string rest = body.substr(comma + 1);
      std::size_t comma2 = rest.find(',');
      std::string count_field = comma2 == std::string::npos ? rest : rest.substr(0, comma2);
      long long src_line = 0;
      long long count = 0;
      if (!parse_long_long(line_field, src_line) || src_line <= 0 ||
          !parse_long_long(count_field, count) || count < 0) {
        fail(ErrorKind::Parse, std::string(origin) + " line " + std::to_string(line_no) +
                                   ": malformed DA record '" + line + "'");
      }
      hits_by_id[current_file + ":" + std::to_string(src_line)] += count;
      continue;
    }
    // Other lcov record types (TN, FN, FNDA, BRDA, LH, LF, ...) carry no
    // line-coverage points and are skipped.
  }
  for (const auto& [id, hits] : hits_by_id) {
    db.add_point(CoveragePoint{id, PointKind::Line, hits});
  }
  return db;
}

CoverageDatabase merge(const CoverageDatabase& a, const CoverageDatabase& b) {
  const auto& pa = a.points();
  const auto& pb = b.points();
  std::vector<std::string> only_a;
  std::vector<std::string> only_b;
  for (const auto& [id, point] : pa) {
    if (!pb.count(id)) {
      only_a.push_back(id);
    }
  }
  for (const auto& [id, point] : pb) {
    if (!pa.count(id)) {
      only_b.push_back(id);
    }
  }
  if (!only_a.empty() || !only_b.empty()) {
    auto list = [](const std::vector<std::string>& ids) {
      std::string out;
      std::size_t shown = std::min<std::size_t>(ids.size(), 20);
      for (std::size_t i = 0; i < shown; ++i) {
        if (i > 0) {
          out += ", ";
        }
        out += ids[i];
      }
      if (ids.size() > shown) {
        out += ", ... (" + std::to_string(ids.size() - shown) + " more)";
      }
      return out.empty() ? std::string("none") : out;
    };
    fail(ErrorKind::Merge, "point universes differ; only in first: [" + list(only_a) +
                               "]; only in second: [" + list(only_b) + "]");
  }
  CoverageDatabase out;
  for (const auto& [id, point] : pa) {
    const CoveragePoint& other = pb.at(id);
    if (other.kind != point.kind) {
      fail(ErrorKind::Merge, "point '" + id + "' has kind " + to_string(point.kind) +
                                 " in first input but " + to_string(other.kind) + " in second");
    }
    out.add_point(CoveragePoint{id, point.kind, point.hits + other.hits});
  }
  out.provenance() = a.provenance();
  out.provenance().insert(out.provenance().end(), b.provenance().begin(), b.provenance().end());
  return out;
}

std::string snapshot_text(const CoverageDatabase& db) {
  std::string out;
  for (const Provenance& p : db.provenance()) {
    out += "#!provenance " + std::to_string(p.iteration) + " " + std::to_string(p.seed) + "\n";
  }
  for (const auto& [id, point] : db.points()) {
    out += std::string(to_string(point.kind)) + " " + id + " " + std::to_string(point.hits) + "\n";
  }
  return out;
}

void snapshot(const CoverageDatabase& db, const fs::path& path) {
  write_text_file(path, snapshot_text(db));
}

CoverageDatabase load_snapshot(const fs::path& path) {
  std::string text = read_text_file(path);
  CoverageDatabase db = parse_canonical(text, path.string());
  for (const std::string& raw : split_lines(text)) {
    std::string line = trim(raw);
    if (line.rfind("#!provenance", 0) != 0) {
      continue;
    }
    std::vector<std::string> fields = split_fields(line);
    long long iteration = 0;
    long long seed = 0;
    if (fields.size() != 3 || !parse_long_long(fields[1], iteration) ||
        !parse_long_long(fields[2], seed)) {
      fail(ErrorKind::Parse, path.string() + ": malformed provenance line '" + line + "'");
    }
    db.provenance().push_back(Provenance{static_cast<int>(iteration), static_cast<int>(seed)});
  }
  return db;
}

void SourceIndex::add_file(const std::string& name, const std::string& content) {
  file_lines_[name] = split_lines(content);
}

void SourceIndex::annotate(const std::string& point_id, const std::string& text) {
  annotations_[point_id] = text;
}

std::optional<std::string> SourceIndex::lookup(const std::string& point_id) const {
  auto annotated = annotations_.find(point_id);
  if (annotated != annotations_.end()) {
    return annotated->second;
  }
  PointLocation loc = locate_point(point_id);
  if (!loc.has_line) {
    return std::nullopt;
  }
  auto by_file = file_lines_.find(loc.file);
  if (by_file == file_lines_.end()) {
    // Info-format ids may carry full paths while the index was keyed by the
    // path the design was configured with; fall back to basename matching.
    std::string base = fs::path(loc.file).filename().string();
    for (const auto& [name, lines] : file_lines_) {
      if (fs::path(name).filename().string() == base) {
        by_file = file_lines_.find(name);
        break;
      }
    }
  }
  if (by_file == file_lines_.end()) {
    return std::nullopt;
  }
  if (loc.line < 1 || static_cast<std::size_t>(loc.line) > by_file->second.size()) {
    return std::nullopt;
  }
  return trim(by_file->second[static_cast<std::size_t>(loc.line - 1)]);
}

namespace {

struct FeedbackGroup {
  std::string name;
  std::vector<const CoveragePoint*> points;
};

}  // namespace

std::string feedback(const CoverageDatabase& db, const SourceIndex& sources, int limit) {
  if (db.empty()) {
    fail(ErrorKind::State, "coverage feedback requires a non-empty database");
  }
  if (limit < 1) {
    fail(ErrorKind::Invalid, "feedback limit must be positive");
  }
  std::ostringstream out;
  out << "coverage " << format_percent(db.percentage()) << "% (" << db.covered_count() << "/"
      << db.size() << " points covered)\n";

  std::map<std::string, FeedbackGroup> groups;
  for (const auto& [id, point] : db.points()) {
    if (point.covered()) {
      continue;
    }
    PointLocation loc = locate_point(id);
    FeedbackGroup& group = groups[loc.group];
    group.name = loc.group;
    group.points.push_back(&point);
  }
  if (groups.empty()) {
    out << "coverage target reached: no uncovered points remain\n";
    return out.str();
  }

  std::vector<const FeedbackGroup*> ordered;
  for (const auto& [name, group] : groups) {
    ordered.push_back(&group);
  }
  std::sort(ordered.begin(), ordered.end(), [](const FeedbackGroup* a, const FeedbackGroup* b) {
    if (a->points.size() != b->points.size()) {
      return a->points.size() > b->points.size();
    }
    return a->name < b->name;
  });

  std::size_t total_uncovered = db.size() - db.covered_count();
  out << "uncovered points (" << total_uncovered << ") by group, most uncovered first:\n";
  for (const FeedbackGroup* group : ordered) {
    out << "group " << group->name << " (" << group->points.size() << " uncovered):\n";
    std::vector<const CoveragePoint*> points = group->points;
    std::sort(points.begin(), points.end(), [](const CoveragePoint* a, const CoveragePoint* b) {
      PointLocation la = locate_point(a->id);
      PointLocation lb = locate_point(b->id);
      if (la.has_line != lb.has_line) {
        return la.has_line;
      }
      if (la.has_line && la.line != lb.line) {
        return la.line < lb.line;
      }
      return a->id < b->id;
    });
    std::size_t shown = std::min<std::size_t>(points.size(), static_cast<std::size_t>(limit));
    for (std::size_t i = 0; i < shown; ++i) {
      const CoveragePoint& point = *points[i];
      std::optional<std::string> source = sources.lookup(point.id);
      out << "  - " << to_string(point.kind) << " " << point.id << ": "
          << (source ? *source : std::string("<source unavailable>")) << "\n";
    }
    if (points.size() > shown) {
      out << "  ... +" << (points.size() - shown) << " more\n";
    }
  }
  return out.str();
}

}  // namespace covagent
