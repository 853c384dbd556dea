#include "taxonomy.hpp"

#include <algorithm>
#include <sstream>

namespace covagent {

const std::array<HoleCategory, 6>& hole_categories() {
  static const std::array<HoleCategory, 6> categories = {{
      {HoleCategoryId::M1, "M1", "Integration Tied-Off Hardware", "Ceiling",
       "Internal signals hardwired to constants at integration level"},
      {HoleCategoryId::M2, "M2", "Infeasible Boundaries", "Ceiling",
       "Coverage points requiring astronomically many simulation cycles"},
      {HoleCategoryId::M3, "M3", "Defensive/Dead Code", "Ceiling",
       "FSM defaults, debug paths, redundant conditions"},
      {HoleCategoryId::R1, "R1", "Protocol Sequencing Complexity", "Frontier",
       "Multi-step protocol handshakes requiring correct bus functional models"},
      {HoleCategoryId::R2, "R2", "Multi-Module Pipeline Warm-up", "Frontier",
       "Deep pipeline chains requiring coordinated activation"},
      {HoleCategoryId::R3, "R3", "Narrow Timing & Rare Input", "Frontier",
       "Cycle-precise alignment or sparse numerical conditions"},
  }};
  return categories;
}

const HoleCategory& hole_category(HoleCategoryId id) {
  return hole_categories()[static_cast<std::size_t>(id)];
}

std::optional<HoleCategoryId> hole_category_from(std::string_view code) {
  for (const HoleCategory& category : hole_categories()) {
    if (code == category.code) {
      return category.id;
    }
  }
  return std::nullopt;
}

bool is_ceiling(HoleCategoryId id) {
  return id == HoleCategoryId::M1 || id == HoleCategoryId::M2 || id == HoleCategoryId::M3;
}

namespace {

std::optional<std::string> extract_fenced_json(const std::string& text) {
  std::size_t search = 0;
  while (true) {
    std::size_t open = text.find("```", search);
    if (open == std::string::npos) {
      return std::nullopt;
    }
    std::size_t body_start = text.find('\n', open);
    if (body_start == std::string::npos) {
      return std::nullopt;
    }
    std::string info = trim(text.substr(open + 3, body_start - open - 3));
    std::size_t close = text.find("```", body_start);
    if (close == std::string::npos) {
      return std::nullopt;
    }
    std::string body = text.substr(body_start + 1, close - body_start - 1);
    if (info.empty() || info == "json") {
      Json probe = Json::parse(body, nullptr, false);
      if (!probe.is_discarded()) {
        return body;
      }
    }
    search = close + 3;
  }
}

}  // namespace

std::vector<HoleClassification> parse_agent_analysis(const std::string& text,
                                                     const std::set<std::string>& residual_ids,
                                                     std::vector<std::string>* warnings) {
  std::vector<HoleClassification> out;
  auto warn = [&](const std::string& message) {
    if (warnings) {
      warnings->push_back(message);
    }
  };
  std::optional<std::string> block = extract_fenced_json(text);
  if (!block) {
    if (!text.empty()) {
      warn("final analysis contained no parseable fenced JSON block");
    }
    return out;
  }
  Json value = Json::parse(*block, nullptr, false);
  if (!value.is_array()) {
    warn("final analysis JSON block is not an array of classifications");
    return out;
  }
  std::set<std::string> seen;
  for (const Json& entry : value) {
    if (!entry.is_object() || !entry.contains("point_id") || !entry.contains("category")) {
      warn("dropped a classification entry missing point_id or category");
      continue;
    }
    std::string point_id = entry.at("point_id").get<std::string>();
    std::string code = entry.at("category").get<std::string>();
    if (!residual_ids.count(point_id)) {
      warn("dropped classification for '" + point_id + "': not a residual uncovered point");
      continue;
    }
    if (!seen.insert(point_id).second) {
      warn("dropped duplicate classification for '" + point_id + "'");
      continue;
    }
    std::optional<HoleCategoryId> category = hole_category_from(code);
    if (!category) {
      warn("dropped classification for '" + point_id + "': unknown category '" + code + "'");
      continue;
    }
    HoleClassification classification;
    classification.point_id = point_id;
    classification.category = *category;
    classification.rationale = entry.value("rationale", std::string("(no rationale given)"));
    classification.source = "agent";
    out.push_back(std::move(classification));
  }
  return out;
}

std::optional<HoleClassification> rule_classify(const CoveragePoint& point,
                                                const DesignManifest& manifest) {
  if (point.covered()) {
    fail(ErrorKind::State, "cannot classify covered point '" + point.id + "' as a coverage hole");
  }
  const ManifestPoint* declared = manifest.find_point(point.id);
  if (!declared) {
    return std::nullopt;
  }

  for (const std::string& signal : declared->predicate.referenced_signals()) {
    const InternalDecl* internal = manifest.find_internal(signal);
    if (!internal) {
      continue;
    }
    if (internal->kind == InternalKind::Tied) {
      HoleClassification classification;
      classification.point_id = point.id;
      classification.category = HoleCategoryId::M1;
      classification.rationale = "predicate observes '" + internal->name +
                                 "', which is tied to constant " +
                                 std::to_string(internal->value) + " at integration";
      classification.source = "rule";
      return classification;
    }
    // Counter internals advance once per vector, so the minimum vector count
    // to satisfy an eq/range bound is the distance from the initial value.
    const Predicate& predicate = declared->predicate;
    if (predicate.op == PredicateOp::Seq) {
      continue;
    }
    std::uint64_t target = predicate.op == PredicateOp::Eq ? predicate.value : predicate.lo;
    std::uint64_t distance =
        mask_to_width(target - internal->value, internal->width);
    // distance + 1 vectors are required; the infeasibility threshold is 2^32.
    if (distance >= 0xFFFFFFFFULL) {
      HoleClassification classification;
      classification.point_id = point.id;
      classification.category = HoleCategoryId::M2;
      classification.rationale = "reaching '" + internal->name + "' = " + std::to_string(target) +
                                 " requires " + std::to_string(distance + 1) +
                                 " simulation cycles";
      classification.source = "rule";
      return classification;
    }
  }

  if (declared->flags.count("dead") || declared->flags.count("default")) {
    HoleClassification classification;
    classification.point_id = point.id;
    classification.category = HoleCategoryId::M3;
    classification.rationale = declared->flags.count("dead")
                                   ? "point is flagged as dead code"
                                   : "point covers a defensive default path";
    classification.source = "rule";
    return classification;
  }
  return std::nullopt;
}

TaxonomyResult classify_residual(const CoverageDatabase& final_db,
                                 const std::string& agent_analysis,
                                 const DesignManifest* manifest) {
  TaxonomyResult result;
  std::set<std::string> residual_ids = final_db.uncovered_ids();
  std::vector<HoleClassification> agent =
      parse_agent_analysis(agent_analysis, residual_ids, &result.warnings);
  std::map<std::string, HoleClassification> by_id;
  for (HoleClassification& classification : agent) {
    by_id.emplace(classification.point_id, std::move(classification));
  }

  for (const std::string& id : residual_ids) {
    std::optional<HoleClassification> rule;
    if (manifest) {
      rule = rule_classify(final_db.points().at(id), *manifest);
    }
    auto from_agent = by_id.find(id);
    if (from_agent != by_id.end()) {
      if (rule && rule->category != from_agent->second.category) {
        result.conflicts.push_back(
            "point '" + id + "': agent classified " +
            hole_category(from_agent->second.category).code + " but rules say " +
            hole_category(rule->category).code + " (agent kept)");
      }
      result.classifications.push_back(from_agent->second);
      continue;
    }
    if (rule) {
      result.classifications.push_back(std::move(*rule));
      continue;
    }
    HoleClassification fallback;
    fallback.point_id = id;
    fallback.category = HoleCategoryId::R2;
    fallback.rationale = "agent abstained";
    fallback.source = "rule";
    fallback.defaulted = true;
    ++result.defaulted_count;
    result.classifications.push_back(std::move(fallback));
  }
  return result;
}

std::string exclusion_list_text(const std::vector<HoleClassification>& classifications) {
  std::string out =
      "# coverage exclusion list: verified unreachable (Ceiling) points only\n"
      "# frontier holes are escalated for human review instead of excluded\n";
  for (const HoleClassification& classification : classifications) {
    if (!is_ceiling(classification.category)) {
      continue;
    }
    out += "exclude " + classification.point_id + " # " +
           hole_category(classification.category).code + " " + classification.rationale + "\n";
  }
  return out;
}

namespace {

std::array<int, 6> category_counts(const TaxonomyResult& taxonomy) {
  std::array<int, 6> counts{};
  for (const HoleClassification& classification : taxonomy.classifications) {
    counts[static_cast<std::size_t>(classification.category)] += 1;
  }
  return counts;
}

}  // namespace

Json final_report_json(const AgentState& state, const TaxonomyResult& taxonomy) {
  const CoverageDatabase& db = state.cumulative_coverage;
  std::array<int, 6> counts = category_counts(taxonomy);
  int residual = static_cast<int>(taxonomy.classifications.size());
  int ceiling = 0;
  int frontier = 0;
  for (const HoleClassification& classification : taxonomy.classifications) {
    (is_ceiling(classification.category) ? ceiling : frontier) += 1;
  }

  Json table = Json::array();
  for (const HoleCategory& category : hole_categories()) {
    int count = counts[static_cast<std::size_t>(category.id)];
    double percent = residual > 0 ? 100.0 * count / residual : 0.0;
    table.push_back(Json{{"id", category.code},
                         {"category", category.name},
                         {"tag", category.tag},
                         {"description", category.description},
                         {"count", count},
                         {"percent_of_residual", percent}});
  }

  Json classifications = Json::array();
  Json escalations = Json::array();
  for (const HoleClassification& classification : taxonomy.classifications) {
    const HoleCategory& category = hole_category(classification.category);
    classifications.push_back(Json{{"point_id", classification.point_id},
                                   {"category", category.code},
                                   {"tag", category.tag},
                                   {"rationale", classification.rationale},
                                   {"source", classification.source},
                                   {"defaulted", classification.defaulted}});
    if (!is_ceiling(classification.category)) {
      escalations.push_back(Json{{"point_id", classification.point_id},
                                 {"category", category.code},
                                 {"rationale", classification.rationale}});
    }
  }

  LedgerTable ledger_table = state.ledger.totals();
  Json token_categories = Json::array();
  for (TokenCategory category : all_categories()) {
    const CategoryTotals& totals = ledger_table.at(category);
    token_categories.push_back(Json{{"category", to_string(category)},
                                    {"abbrev", category_abbrev(category)},
                                    {"total", totals.total()},
                                    {"share_percent", ledger_table.share_percent(category)}});
  }

  return Json{
      {"run",
       Json{{"model_id", state.config.model_id},
            {"temperature", state.config.temperature},
            {"seeds_per_iteration", state.config.seeds_per_iteration},
            {"max_iterations", state.config.max_iterations},
            {"token_budget", state.config.token_budget},
            {"coverage_target", state.config.coverage_target},
            {"iterations", state.iteration},
            {"termination_reason",
             state.termination_reason ? Json(to_string(*state.termination_reason)) : Json()}}},
      {"coverage",
       Json{{"percent", db.percentage()},
            {"covered", db.covered_count()},
            {"total", db.size()}}},
      {"taxonomy",
       Json{{"residual_holes", residual},
            {"ceiling_count", ceiling},
            {"frontier_count", frontier},
            {"defaulted_count", taxonomy.defaulted_count},
            {"table", table},
            {"classifications", classifications},
            {"conflicts", taxonomy.conflicts},
            {"warnings", taxonomy.warnings}}},
      {"tokens",
       Json{{"billed_total", state.ledger.total_billed()}, {"categories", token_categories}}},
      {"cost_dollars", state.ledger.cost(state.config.pricing)},
      {"escalations", escalations},
      {"artifacts",
       Json{{"curve", "reports/curve.csv"},
            {"tokens", "reports/tokens.json"},
            {"exclusions", "reports/exclusions.txt"},
            {"final_coverage", "cov/final.covdb"}}},
  };
}

std::string final_report_text(const AgentState& state, const TaxonomyResult& taxonomy) {
  const CoverageDatabase& db = state.cumulative_coverage;
  std::array<int, 6> counts = category_counts(taxonomy);
  int residual = static_cast<int>(taxonomy.classifications.size());
  int ceiling = 0;
  int frontier = 0;
  for (const HoleClassification& classification : taxonomy.classifications) {
    (is_ceiling(classification.category) ? ceiling : frontier) += 1;
  }
  Usage usage = state.ledger.usage_totals();

  std::ostringstream out;
  out << "coverage closure run report\n";
  out << "===========================\n";
  out << "model:            " << state.config.model_id << "\n";
  out << "temperature:      " << format_fixed(state.config.temperature, 2) << "\n";
  out << "seeds/iteration:  " << state.config.seeds_per_iteration << "\n";
  out << "iterations:       " << state.iteration << " (max " << state.config.max_iterations
      << ")\n";
  out << "termination:      "
      << (state.termination_reason ? to_string(*state.termination_reason) : "(none)") << "\n";
  out << "final coverage:   " << format_percent(db.percentage()) << "% (" << db.covered_count()
      << "/" << db.size() << " points)\n";
  out << "tokens billed:    " << state.ledger.total_billed() << " (input " << usage.input_tokens
      << ", output " << usage.output_tokens << ", reasoning " << usage.reasoning_tokens << ")\n";
  out << "cost:             $" << format_fixed(state.ledger.cost(state.config.pricing), 4) << "\n";
  out << "\n";

  out << "coverage hole taxonomy: " << residual << " residual holes (ceiling " << ceiling
      << ", frontier " << frontier << ")\n";
  out << "  id  category                        tag       count  % of residual\n";
  for (const HoleCategory& category : hole_categories()) {
    int count = counts[static_cast<std::size_t>(category.id)];
    double percent = residual > 0 ? 100.0 * count / residual : 0.0;
    char line[128];
    std::snprintf(line, sizeof(line), "  %-3s %-31s %-9s %5d  %6s\n", category.code, category.name,
                  category.tag, count, format_fixed(percent, 1).c_str());
    out << line;
  }
  if (taxonomy.defaulted_count > 0) {
    out << "  (" << taxonomy.defaulted_count
        << " point(s) defaulted to R2 because agent and rules both abstained)\n";
  }
  out << "\n";

  out << allocation_text(state.ledger);
  out << "\n";

  out << "escalations (frontier holes for human review):\n";
  bool any_escalation = false;
  for (const HoleClassification& classification : taxonomy.classifications) {
    if (is_ceiling(classification.category)) {
      continue;
    }
    any_escalation = true;
    out << "  - " << classification.point_id << " ["
        << hole_category(classification.category).code << "] " << classification.rationale << "\n";
  }
  if (!any_escalation) {
    out << "  (none)\n";
  }
  if (!taxonomy.conflicts.empty()) {
    out << "\nclassification conflicts:\n";
    for (const std::string& conflict : taxonomy.conflicts) {
      out << "  - " << conflict << "\n";
    }
  }
  out << "\nartifacts: reports/curve.csv, reports/tokens.json, reports/exclusions.txt, "
         "cov/final.covdb\n";
  return out.str();
}

}  // namespace covagent
