#include "ledger.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <sstream>

namespace covagent {

const char* to_string(TokenCategory category) {
  switch (category) {
    case TokenCategory::SystemPrompt: return "SystemPrompt";
    case TokenCategory::DesignComprehension: return "DesignComprehension";
    case TokenCategory::StimulusGeneration: return "StimulusGeneration";
    case TokenCategory::CoverageFeedback: return "CoverageFeedback";
    case TokenCategory::ErrorRecovery: return "ErrorRecovery";
    case TokenCategory::AgenticOverhead: return "AgenticOverhead";
  }
  return "unknown";
}

const char* category_abbrev(TokenCategory category) {
  switch (category) {
    case TokenCategory::SystemPrompt: return "SP";
    case TokenCategory::DesignComprehension: return "DC";
    case TokenCategory::StimulusGeneration: return "SG";
    case TokenCategory::CoverageFeedback: return "CF";
    case TokenCategory::ErrorRecovery: return "ER";
    case TokenCategory::AgenticOverhead: return "AO";
  }
  return "??";
}

const std::array<TokenCategory, kCategoryCount>& all_categories() {
  static const std::array<TokenCategory, kCategoryCount> categories = {
      TokenCategory::SystemPrompt,     TokenCategory::DesignComprehension,
      TokenCategory::StimulusGeneration, TokenCategory::CoverageFeedback,
      TokenCategory::ErrorRecovery,    TokenCategory::AgenticOverhead,
  };
  return categories;
}

const char* to_string(TokenComponent component) {
  switch (component) {
    case TokenComponent::Input: return "input";
    case TokenComponent::Output: return "output";
    case TokenComponent::Reasoning: return "reasoning";
  }
  return "unknown";
}

Json CallRecord::to_json() const {
  Json tags = Json::object();
  for (const auto& [tag, estimate] : tagged_input_estimates) {
    tags[tag] = estimate;
  }
  return Json{
      {"index", index},
      {"phase", phase},
      {"message_count", message_count},
      {"tagged_input_estimates", tags},
      {"tool_schemas_estimate", tool_schemas_estimate},
      {"usage",
       Json{{"input", usage.input_tokens},
            {"output", usage.output_tokens},
            {"reasoning", usage.reasoning_tokens},
            {"flagged", usage.flagged}}},
      {"produced_tool_calls", produced_tool_calls},
      {"wrote_testbench", wrote_testbench},
      {"read_design", read_design},
      {"follows_error_log", follows_error_log},
      {"design_newest", design_newest},
  };
}

CallRecord CallRecord::from_json(const Json& value) {
  CallRecord record;
  record.index = value.at("index").get<int>();
  record.phase = value.at("phase").get<std::string>();
  record.message_count = value.at("message_count").get<int>();
  for (const auto& [tag, estimate] : value.at("tagged_input_estimates").items()) {
    record.tagged_input_estimates[tag] = estimate.get<long long>();
  }
  record.tool_schemas_estimate = value.at("tool_schemas_estimate").get<long long>();
  const Json& usage = value.at("usage");
  record.usage.input_tokens = usage.at("input").get<long long>();
  record.usage.output_tokens = usage.at("output").get<long long>();
  record.usage.reasoning_tokens = usage.at("reasoning").get<long long>();
  record.usage.flagged = usage.at("flagged").get<bool>();
  record.produced_tool_calls = value.at("produced_tool_calls").get<std::vector<std::string>>();
  record.wrote_testbench = value.at("wrote_testbench").get<bool>();
  record.read_design = value.at("read_design").get<bool>();
  record.follows_error_log = value.at("follows_error_log").get<bool>();
  record.design_newest = value.at("design_newest").get<bool>();
  return record;
}

std::vector<long long> largest_remainder_split(long long total,
                                               const std::vector<long long>& weights) {
  if (total < 0) {
    fail(ErrorKind::Invalid, "cannot split a negative total");
  }
  for (long long w : weights) {
    if (w < 0) {
      fail(ErrorKind::Invalid, "split weights must be non-negative");
    }
  }
  std::vector<long long> out(weights.size(), 0);
  long long weight_sum = std::accumulate(weights.begin(), weights.end(), 0LL);
  if (weight_sum == 0) {
    if (total != 0) {
      fail(ErrorKind::Invalid, "cannot split a positive total over all-zero weights");
    }
    return out;
  }
  long long assigned = 0;
  std::vector<std::pair<long long, std::size_t>> remainders;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    out[i] = total * weights[i] / weight_sum;
    assigned += out[i];
    remainders.emplace_back(total * weights[i] % weight_sum, i);
  }
  // Ties on remainder resolve by position so the split is deterministic for a
  // fixed weight order.
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  long long leftover = total - assigned;
  for (long long i = 0; i < leftover; ++i) {
    out[remainders[static_cast<std::size_t>(i)].second] += 1;
  }
  return out;
}

namespace {

struct TagBucket {
  const char* tag;
  TokenCategory category;
};

// Fixed tag order: the largest-remainder tie-break depends on position, so
// this order is part of the attribution contract.
constexpr TagBucket kInputBuckets[] = {
    {"system_prompt", TokenCategory::SystemPrompt},
    {"design_content", TokenCategory::DesignComprehension},
    {"coverage_feedback", TokenCategory::CoverageFeedback},
    {"error_log", TokenCategory::ErrorRecovery},
    {"termination", TokenCategory::AgenticOverhead},
    {"other", TokenCategory::AgenticOverhead},
};

TokenCategory generation_category(const CallRecord& record) {
  if (record.phase == "Finalize") {
    return TokenCategory::AgenticOverhead;
  }
  if (record.follows_error_log) {
    return TokenCategory::ErrorRecovery;
  }
  if (record.wrote_testbench) {
    return TokenCategory::StimulusGeneration;
  }
  if (record.read_design || (record.produced_tool_calls.empty() && record.design_newest)) {
    return TokenCategory::DesignComprehension;
  }
  return TokenCategory::AgenticOverhead;
}

}  // namespace

std::vector<Attribution> classify(const CallRecord& record) {
  std::vector<Attribution> out;

  std::vector<long long> weights;
  for (const TagBucket& bucket : kInputBuckets) {
    auto it = record.tagged_input_estimates.find(bucket.tag);
    weights.push_back(it == record.tagged_input_estimates.end() ? 0 : it->second);
  }
  // Tool schemas ride along with every request and count as orchestration
  // machinery rather than any semantic category.
  weights.push_back(record.tool_schemas_estimate);

  long long weight_sum = std::accumulate(weights.begin(), weights.end(), 0LL);
  std::array<long long, kCategoryCount> input_by_category{};
  if (weight_sum == 0) {
    input_by_category[static_cast<int>(TokenCategory::AgenticOverhead)] = record.usage.input_tokens;
  } else {
    std::vector<long long> split = largest_remainder_split(record.usage.input_tokens, weights);
    for (std::size_t i = 0; i < std::size(kInputBuckets); ++i) {
      input_by_category[static_cast<int>(kInputBuckets[i].category)] += split[i];
    }
    input_by_category[static_cast<int>(TokenCategory::AgenticOverhead)] += split.back();
  }
  for (TokenCategory category : all_categories()) {
    long long count = input_by_category[static_cast<int>(category)];
    if (count > 0) {
      out.push_back(Attribution{category, TokenComponent::Input, count});
    }
  }

  TokenCategory generated = generation_category(record);
  if (record.usage.output_tokens > 0) {
    out.push_back(Attribution{generated, TokenComponent::Output, record.usage.output_tokens});
  }
  if (record.usage.reasoning_tokens > 0) {
    out.push_back(Attribution{generated, TokenComponent::Reasoning, record.usage.reasoning_tokens});
  }
  return out;
}

CategoryTotals& LedgerTable::at(TokenCategory category) {
  return per_category[static_cast<std::size_t>(category)];
}

const CategoryTotals& LedgerTable::at(TokenCategory category) const {
  return per_category[static_cast<std::size_t>(category)];
}

long long LedgerTable::grand_total() const {
  long long sum = 0;
  for (const CategoryTotals& totals : per_category) {
    sum += totals.total();
  }
  return sum;
}

double LedgerTable::share_percent(TokenCategory category) const {
  long long grand = grand_total();
  if (grand == 0) {
    return 0.0;
  }
  return 100.0 * static_cast<double>(at(category).total()) / static_cast<double>(grand);
}

void TokenLedger::append(CallRecord record) {
  if (!records_.empty() && record.index <= records_.back().index) {
    fail(ErrorKind::Invalid, "call record indices must be strictly increasing");
  }
  records_.push_back(std::move(record));
}

void TokenLedger::sample_curve(double coverage_percent) {
  curve_.push_back(CurvePoint{total_billed(), coverage_percent});
}

long long TokenLedger::total_billed() const {
  long long sum = 0;
  for (const CallRecord& record : records_) {
    sum += record.usage.total();
  }
  return sum;
}

Usage TokenLedger::usage_totals() const {
  Usage sum;
  for (const CallRecord& record : records_) {
    sum.input_tokens += record.usage.input_tokens;
    sum.output_tokens += record.usage.output_tokens;
    sum.reasoning_tokens += record.usage.reasoning_tokens;
    sum.flagged = sum.flagged || record.usage.flagged;
  }
  return sum;
}

LedgerTable TokenLedger::totals() const {
  LedgerTable table;
  for (const CallRecord& record : records_) {
    for (const Attribution& attribution : classify(record)) {
      CategoryTotals& totals = table.at(attribution.category);
      switch (attribution.component) {
        case TokenComponent::Input: totals.input += attribution.count; break;
        case TokenComponent::Output: totals.output += attribution.count; break;
        case TokenComponent::Reasoning: totals.reasoning += attribution.count; break;
      }
    }
  }
  return table;
}

double TokenLedger::cost(const PricingTable& pricing) const {
  Usage sum = usage_totals();
  return (static_cast<double>(sum.input_tokens) * pricing.input_price +
          static_cast<double>(sum.output_tokens) * pricing.output_price +
          static_cast<double>(sum.reasoning_tokens) * pricing.reasoning_price) /
         1e6;
}

TokenLedger::Efficiency TokenLedger::efficiency(double final_coverage_percent) const {
  Efficiency efficiency;
  LedgerTable table = totals();
  const CategoryTotals& sg = table.at(TokenCategory::StimulusGeneration);
  if (final_coverage_percent > 0.0) {
    efficiency.sg_tokens_per_coverage_percent =
        static_cast<double>(sg.total()) / final_coverage_percent;
  }
  long long grand = table.grand_total();
  if (grand > 0) {
    efficiency.sg_output_share_percent =
        100.0 * static_cast<double>(sg.output) / static_cast<double>(grand);
  }
  return efficiency;
}

Json TokenLedger::to_json() const {
  Json records = Json::array();
  for (const CallRecord& record : records_) {
    records.push_back(record.to_json());
  }
  Json curve = Json::array();
  for (const CurvePoint& point : curve_) {
    curve.push_back(Json{{"tokens", point.cumulative_tokens}, {"coverage", point.coverage_percent}});
  }
  return Json{{"records", records}, {"curve", curve}};
}

TokenLedger TokenLedger::from_json(const Json& value) {
  TokenLedger ledger;
  for (const Json& entry : value.at("records")) {
    ledger.records_.push_back(CallRecord::from_json(entry));
  }
  for (const Json& entry : value.at("curve")) {
    ledger.curve_.push_back(CurvePoint{entry.at("tokens").get<long long>(),
                                       entry.at("coverage").get<double>()});
  }
  return ledger;
}

Json tokens_report_json(const TokenLedger& ledger, double final_coverage_percent,
                        const PricingTable& pricing) {
  LedgerTable table = ledger.totals();
  Usage sum = ledger.usage_totals();
  Json categories = Json::array();
  for (TokenCategory category : all_categories()) {
    const CategoryTotals& totals = table.at(category);
    categories.push_back(Json{
        {"category", to_string(category)},
        {"abbrev", category_abbrev(category)},
        {"input", totals.input},
        {"output", totals.output},
        {"reasoning", totals.reasoning},
        {"total", totals.total()},
        {"share_percent", table.share_percent(category)},
    });
  }
  TokenLedger::Efficiency efficiency = ledger.efficiency(final_coverage_percent);
  Json records = Json::array();
  for (const CallRecord& record : ledger.records()) {
    records.push_back(record.to_json());
  }
  return Json{
      {"totals",
       Json{{"input", sum.input_tokens},
            {"output", sum.output_tokens},
            {"reasoning", sum.reasoning_tokens},
            {"billed", ledger.total_billed()},
            {"incomplete_usage_flagged", sum.flagged}}},
      {"categories", categories},
      {"efficiency",
       Json{{"sg_tokens_per_coverage_percent", efficiency.sg_tokens_per_coverage_percent},
            {"sg_output_share_percent", efficiency.sg_output_share_percent}}},
      {"cost_dollars", ledger.cost(pricing)},
      {"call_records", records},
  };
}

void write_tokens_json(const TokenLedger& ledger, double final_coverage_percent,
                       const PricingTable& pricing, const std::filesystem::path& path) {
  write_text_file(path, tokens_report_json(ledger, final_coverage_percent, pricing).dump(2) + "\n");
}

std::string curve_csv(const TokenLedger& ledger) {
  std::string out = "cumulative_tokens,coverage_percent\n";
  for (const CurvePoint& point : ledger.curve()) {
    out += std::to_string(point.cumulative_tokens) + "," + format_fixed(point.coverage_percent, 4) +
           "\n";
  }
  return out;
}

void write_curve_csv(const TokenLedger& ledger, const std::filesystem::path& path) {
  write_text_file(path, curve_csv(ledger));
}

std::string allocation_text(const TokenLedger& ledger) {
  const LedgerTable table = ledger.totals();
  std::string out = "token allocation by category\n";
  out += "  category              input      output     reasoning  total      share\n";
  for (TokenCategory category : all_categories()) {
    const CategoryTotals& totals = table.at(category);
    char line[160];
    std::snprintf(line, sizeof(line), "  %-20s  %-9lld  %-9lld  %-9lld  %-9lld  %5s%%\n",
                  to_string(category), totals.input, totals.output, totals.reasoning,
                  totals.total(), format_fixed(table.share_percent(category), 1).c_str());
    out += line;
  }
  return out;
}

std::string curve_svg(const TokenLedger& ledger) {
  const std::vector<CurvePoint>& curve = ledger.curve();
  const int width = 640;
  const int height = 400;
  const int margin = 50;
  long long max_tokens = 1;
  for (const CurvePoint& point : curve) {
    max_tokens = std::max(max_tokens, point.cumulative_tokens);
  }
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  svg << "  <rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
  svg << "  <line x1=\"" << margin << "\" y1=\"" << height - margin << "\" x2=\"" << width - margin
      << "\" y2=\"" << height - margin << "\" stroke=\"black\"/>\n";
  svg << "  <line x1=\"" << margin << "\" y1=\"" << margin << "\" x2=\"" << margin << "\" y2=\""
      << height - margin << "\" stroke=\"black\"/>\n";
  svg << "  <text x=\"" << width / 2 << "\" y=\"" << height - 12
      << "\" text-anchor=\"middle\" font-size=\"13\">cumulative tokens (max " << max_tokens
      << ")</text>\n";
  svg << "  <text x=\"16\" y=\"" << height / 2
      << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 16 " << height / 2
      << ")\">coverage %</text>\n";
  if (!curve.empty()) {
    svg << "  <polyline fill=\"none\" stroke=\"#1f6fb2\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < curve.size(); ++i) {
      double x = margin + (static_cast<double>(curve[i].cumulative_tokens) /
                           static_cast<double>(max_tokens)) *
                              (width - 2 * margin);
      double y = (height - margin) - (curve[i].coverage_percent / 100.0) * (height - 2 * margin);
      if (i > 0) {
        svg << " ";
      }
      svg << format_fixed(x, 1) << "," << format_fixed(y, 1);
    }
    svg << "\"/>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

std::string allocation_svg(const TokenLedger& ledger) {
  LedgerTable table = ledger.totals();
  const int width = 640;
  const int bar_height = 30;
  const int gap = 14;
  const int top = 40;
  const int label_width = 190;
  int height = top + kCategoryCount * (bar_height + gap) + 20;
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  svg << "  <rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
  svg << "  <text x=\"" << width / 2
      << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">token allocation by category</text>\n";
  int y = top;
  for (TokenCategory category : all_categories()) {
    double share = table.share_percent(category);
    double bar = (share / 100.0) * (width - label_width - 100);
    svg << "  <text x=\"" << label_width - 8 << "\" y=\"" << y + bar_height - 10
        << "\" text-anchor=\"end\" font-size=\"12\">" << to_string(category) << "</text>\n";
    svg << "  <rect x=\"" << label_width << "\" y=\"" << y << "\" width=\""
        << format_fixed(std::max(bar, 0.5), 1) << "\" height=\"" << bar_height
        << "\" fill=\"#3b8a5a\"/>\n";
    svg << "  <text x=\"" << format_fixed(label_width + bar + 6, 1) << "\" y=\""
        << y + bar_height - 10 << "\" font-size=\"12\">" << format_percent(share) << "% ("
        << table.at(category).total() << ")</text>\n";
    y += bar_height + gap;
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace covagent
