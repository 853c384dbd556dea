#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "util.hpp"

namespace covagent {

enum class TokenCategory {
  SystemPrompt,
  DesignComprehension,
  StimulusGeneration,
  CoverageFeedback,
  ErrorRecovery,
  AgenticOverhead,
};

inline constexpr int kCategoryCount = 6;

const char* to_string(TokenCategory category);
const char* category_abbrev(TokenCategory category);
const std::array<TokenCategory, kCategoryCount>& all_categories();

enum class TokenComponent { Input, Output, Reasoning };

const char* to_string(TokenComponent component);

// Per-call usage as billed by the provider. `flagged` marks calls whose
// provider response lacked a component breakdown; missing components are 0.
struct Usage {
  long long input_tokens = 0;
  long long output_tokens = 0;
  long long reasoning_tokens = 0;
  bool flagged = false;

  long long total() const { return input_tokens + output_tokens + reasoning_tokens; }
};

// Self-contained record of one LLM call: everything classification needs is
// captured at call time so attribution is a pure function of the record.
struct CallRecord {
  int index = 0;
  std::string phase;
  int message_count = 0;
  // Estimated token weight of the request messages, bucketed by message tag.
  std::map<std::string, long long> tagged_input_estimates;
  long long tool_schemas_estimate = 0;
  Usage usage;
  std::vector<std::string> produced_tool_calls;
  bool wrote_testbench = false;
  bool read_design = false;
  bool follows_error_log = false;
  bool design_newest = false;

  Json to_json() const;
  static CallRecord from_json(const Json& value);
};

struct Attribution {
  TokenCategory category;
  TokenComponent component;
  long long count = 0;
};

// Splits `total` across `weights` proportionally using integer largest-
// remainder rounding: entry i gets floor(total*w_i/W) plus one of the
// `total*W mod`-largest remainders, ties broken by position. The results sum
// to `total` exactly.
std::vector<long long> largest_remainder_split(long long total,
                                               const std::vector<long long>& weights);

// Pure attribution of one call's usage to categories. Input tokens split
// across request-message tags by estimated weight; reasoning and output
// attribute whole-call by phase and call flags.
std::vector<Attribution> classify(const CallRecord& record);

struct CategoryTotals {
  long long input = 0;
  long long output = 0;
  long long reasoning = 0;

  long long total() const { return input + output + reasoning; }
};

struct LedgerTable {
  std::array<CategoryTotals, kCategoryCount> per_category;

  CategoryTotals& at(TokenCategory category);
  const CategoryTotals& at(TokenCategory category) const;
  long long grand_total() const;
  double share_percent(TokenCategory category) const;
};

struct PricingTable {
  double input_price = 0.0;
  double output_price = 0.0;
  double reasoning_price = 0.0;
};

struct CurvePoint {
  long long cumulative_tokens = 0;
  double coverage_percent = 0.0;
};

class TokenLedger {
public:
  void append(CallRecord record);
  void sample_curve(double coverage_percent);

  const std::vector<CallRecord>& records() const { return records_; }
  const std::vector<CurvePoint>& curve() const { return curve_; }

  long long total_billed() const;
  Usage usage_totals() const;
  LedgerTable totals() const;
  // Dollar cost under per-million-token prices.
  double cost(const PricingTable& pricing) const;

  struct Efficiency {
    double sg_tokens_per_coverage_percent = 0.0;
    double sg_output_share_percent = 0.0;
  };
  Efficiency efficiency(double final_coverage_percent) const;

  Json to_json() const;
  static TokenLedger from_json(const Json& value);

private:
  std::vector<CallRecord> records_;
  std::vector<CurvePoint> curve_;
};

Json tokens_report_json(const TokenLedger& ledger, double final_coverage_percent,
                        const PricingTable& pricing);
void write_tokens_json(const TokenLedger& ledger, double final_coverage_percent,
                       const PricingTable& pricing, const std::filesystem::path& path);
std::string curve_csv(const TokenLedger& ledger);
void write_curve_csv(const TokenLedger& ledger, const std::filesystem::path& path);
// Fixed-width text table of per-category totals and shares.
std::string allocation_text(const TokenLedger& ledger);
std::string curve_svg(const TokenLedger& ledger);
std::string allocation_svg(const TokenLedger& ledger);

}  // namespace covagent
