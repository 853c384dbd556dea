#include <doctest.h>

#include <map>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "ledger.hpp"
#include "util.hpp"

using namespace covagent;

namespace {

CallRecord make_record(int index, long long input, long long output, long long reasoning) {
  CallRecord record;
  record.index = index;
  record.phase = "Agent";
  record.usage.input_tokens = input;
  record.usage.output_tokens = output;
  record.usage.reasoning_tokens = reasoning;
  return record;
}

long long attributed_total(const CallRecord& record) {
  long long sum = 0;
  for (const Attribution& attribution : classify(record)) {
    sum += attribution.count;
  }
  return sum;
}

std::map<std::pair<TokenCategory, TokenComponent>, long long> by_bucket(const CallRecord& record) {
  std::map<std::pair<TokenCategory, TokenComponent>, long long> out;
  for (const Attribution& attribution : classify(record)) {
    out[{attribution.category, attribution.component}] += attribution.count;
  }
  return out;
}

}  // namespace

TEST_CASE("largest remainder split matches hand-computed examples") {
  CHECK(largest_remainder_split(10, {1, 1, 1}) == std::vector<long long>{4, 3, 3});
  CHECK(largest_remainder_split(100, {1, 2, 3}) == std::vector<long long>{17, 33, 50});
  CHECK(largest_remainder_split(7, {3, 9}) == std::vector<long long>{2, 5});
  CHECK(largest_remainder_split(5, {1, 1, 1, 1}) == std::vector<long long>{2, 1, 1, 1});
  CHECK(largest_remainder_split(9, {0, 2, 1}) == std::vector<long long>{0, 6, 3});
  CHECK(largest_remainder_split(0, {0, 0}) == std::vector<long long>{0, 0});
}

TEST_CASE("largest remainder split rejects invalid inputs") {
  CHECK_THROWS_AS(largest_remainder_split(-1, {1}), Error);
  CHECK_THROWS_AS(largest_remainder_split(5, {1, -2}), Error);
  CHECK_THROWS_AS(largest_remainder_split(5, {0, 0}), Error);
}

TEST_CASE("largest remainder split conserves the total exactly") {
  std::mt19937 rng(77);
  std::uniform_int_distribution<long long> total_dist(0, 100000);
  std::uniform_int_distribution<long long> weight_dist(0, 5000);
  std::uniform_int_distribution<int> size_dist(1, 8);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<long long> weights(static_cast<std::size_t>(size_dist(rng)));
    for (long long& w : weights) {
      w = weight_dist(rng);
    }
    long long weight_sum = std::accumulate(weights.begin(), weights.end(), 0LL);
    if (weight_sum == 0) {
      weights[0] = 1;
      weight_sum = 1;
    }
    const long long total = total_dist(rng);
    std::vector<long long> split = largest_remainder_split(total, weights);
    REQUIRE(split.size() == weights.size());
    CHECK(std::accumulate(split.begin(), split.end(), 0LL) == total);
    for (std::size_t i = 0; i < split.size(); ++i) {
      // Each entry is its exact proportional floor or one above it.
      const long long floor_share = total * weights[i] / weight_sum;
      CHECK(split[i] >= floor_share);
      CHECK(split[i] <= floor_share + 1);
    }
  }
}

TEST_CASE("input tokens split across tags with schemas as overhead") {
  CallRecord record = make_record(0, 80, 0, 0);
  record.tagged_input_estimates = {{"system_prompt", 30}};
  record.tool_schemas_estimate = 10;
  auto buckets = by_bucket(record);
  CHECK(buckets[{TokenCategory::SystemPrompt, TokenComponent::Input}] == 60);
  CHECK(buckets[{TokenCategory::AgenticOverhead, TokenComponent::Input}] == 20);
  CHECK(attributed_total(record) == 80);
}

TEST_CASE("input remainder goes to the earliest tag in bucket order") {
  // Equal weights for system_prompt, design_content, other: 10 splits 4/3/3
  // with the extra token landing on the first bucket position.
  CallRecord record = make_record(0, 10, 0, 0);
  record.tagged_input_estimates = {
      {"system_prompt", 1}, {"design_content", 1}, {"other", 1}};
  auto buckets = by_bucket(record);
  CHECK(buckets[{TokenCategory::SystemPrompt, TokenComponent::Input}] == 4);
  CHECK(buckets[{TokenCategory::DesignComprehension, TokenComponent::Input}] == 3);
  CHECK(buckets[{TokenCategory::AgenticOverhead, TokenComponent::Input}] == 3);
}

TEST_CASE("input with no tag estimates falls back to overhead") {
  CallRecord record = make_record(0, 55, 0, 0);
  auto buckets = by_bucket(record);
  CHECK(buckets[{TokenCategory::AgenticOverhead, TokenComponent::Input}] == 55);
}

TEST_CASE("generation category follows the documented precedence") {
  CallRecord record = make_record(0, 0, 100, 40);

  SUBCASE("finalize phase wins over every flag") {
    record.phase = "Finalize";
    record.follows_error_log = true;
    record.wrote_testbench = true;
    auto buckets = by_bucket(record);
    CHECK(buckets[{TokenCategory::AgenticOverhead, TokenComponent::Output}] == 100);
    CHECK(buckets[{TokenCategory::AgenticOverhead, TokenComponent::Reasoning}] == 40);
  }
  SUBCASE("error recovery wins over stimulus generation") {
    record.follows_error_log = true;
    record.wrote_testbench = true;
    auto buckets = by_bucket(record);
    CHECK(buckets[{TokenCategory::ErrorRecovery, TokenComponent::Output}] == 100);
  }
  SUBCASE("writing a testbench attributes to stimulus generation") {
    record.wrote_testbench = true;
    auto buckets = by_bucket(record);
    CHECK(buckets[{TokenCategory::StimulusGeneration, TokenComponent::Output}] == 100);
    CHECK(buckets[{TokenCategory::StimulusGeneration, TokenComponent::Reasoning}] == 40);
  }
  SUBCASE("reading the design attributes to comprehension") {
    record.read_design = true;
    auto buckets = by_bucket(record);
    CHECK(buckets[{TokenCategory::DesignComprehension, TokenComponent::Output}] == 100);
  }
  SUBCASE("a toolless turn after fresh design content is comprehension") {
    record.design_newest = true;
    auto buckets = by_bucket(record);
    CHECK(buckets[{TokenCategory::DesignComprehension, TokenComponent::Output}] == 100);
  }
  SUBCASE("a toolless turn without fresh design content is overhead") {
    auto buckets = by_bucket(record);
    CHECK(buckets[{TokenCategory::AgenticOverhead, TokenComponent::Output}] == 100);
  }
  SUBCASE("design_newest does not apply once tool calls were produced") {
    record.design_newest = true;
    record.produced_tool_calls = {"run_simulation"};
    auto buckets = by_bucket(record);
    CHECK(buckets[{TokenCategory::AgenticOverhead, TokenComponent::Output}] == 100);
  }
}

TEST_CASE("classification conserves every token of usage") {
  std::mt19937 rng(31);
  std::uniform_int_distribution<long long> tokens(0, 20000);
  std::uniform_int_distribution<int> coin(0, 1);
  const std::vector<std::string> tags{"system_prompt", "design_content", "coverage_feedback",
                                      "error_log",     "termination",    "other"};
  for (int trial = 0; trial < 100; ++trial) {
    CallRecord record = make_record(trial, tokens(rng), tokens(rng), tokens(rng));
    record.phase = coin(rng) ? "Agent" : "Finalize";
    for (const std::string& tag : tags) {
      if (coin(rng)) {
        record.tagged_input_estimates[tag] = tokens(rng);
      }
    }
    record.tool_schemas_estimate = coin(rng) ? tokens(rng) : 0;
    record.wrote_testbench = coin(rng);
    record.read_design = coin(rng);
    record.follows_error_log = coin(rng);
    record.design_newest = coin(rng);
    CHECK(attributed_total(record) == record.usage.total());
  }
}

TEST_CASE("ledger rejects out-of-order call records") {
  TokenLedger ledger;
  ledger.append(make_record(0, 10, 5, 0));
  ledger.append(make_record(1, 10, 5, 0));
  CHECK_THROWS_AS(ledger.append(make_record(1, 10, 5, 0)), Error);
  CHECK_THROWS_AS(ledger.append(make_record(0, 10, 5, 0)), Error);
}

TEST_CASE("ledger totals and flags aggregate across records") {
  TokenLedger ledger;
  ledger.append(make_record(0, 100, 20, 30));
  CallRecord flagged = make_record(1, 50, 10, 0);
  flagged.usage.flagged = true;
  ledger.append(flagged);
  CHECK(ledger.total_billed() == 210);
  Usage totals = ledger.usage_totals();
  CHECK(totals.input_tokens == 150);
  CHECK(totals.output_tokens == 30);
  CHECK(totals.reasoning_tokens == 30);
  CHECK(totals.flagged);
}

TEST_CASE("cost applies per-million component prices") {
  TokenLedger ledger;
  ledger.append(make_record(0, 1000000, 0, 0));
  CHECK(ledger.cost(PricingTable{1.0, 10.0, 10.0}) == doctest::Approx(1.0).epsilon(1e-12));
  TokenLedger mixed;
  mixed.append(make_record(0, 500000, 250000, 0));
  CHECK(mixed.cost(PricingTable{2.0, 4.0, 0.0}) == doctest::Approx(2.0).epsilon(1e-12));
  TokenLedger fine;
  fine.append(make_record(0, 7000, 1360, 2600));
  // 7000*1.25/1e6 + 1360*10/1e6 + 2600*10/1e6 = 0.04835.
  CHECK(fine.cost(PricingTable{1.25, 10.0, 10.0}) == doctest::Approx(0.04835).epsilon(1e-12));
}

TEST_CASE("curve csv lists samples under a fixed header") {
  TokenLedger ledger;
  ledger.sample_curve(0.0);
  ledger.append(make_record(0, 1000, 100, 0));
  ledger.sample_curve(50.0);
  ledger.append(make_record(1, 2000, 300, 100));
  ledger.sample_curve(83.3333);
  CHECK(curve_csv(ledger) ==
        "cumulative_tokens,coverage_percent\n"
        "0,0.0000\n"
        "1100,50.0000\n"
        "3500,83.3333\n");
}

TEST_CASE("efficiency reports stimulus tokens per coverage point") {
  TokenLedger ledger;
  CallRecord record = make_record(0, 0, 800, 1200);
  record.wrote_testbench = true;
  ledger.append(record);
  TokenLedger::Efficiency efficiency = ledger.efficiency(80.0);
  CHECK(efficiency.sg_tokens_per_coverage_percent == doctest::Approx(25.0));
  CHECK(efficiency.sg_output_share_percent == doctest::Approx(40.0));
  // Zero coverage leaves the ratio at its zero default rather than dividing.
  CHECK(ledger.efficiency(0.0).sg_tokens_per_coverage_percent == doctest::Approx(0.0));
}

TEST_CASE("ledger json round trip preserves records and curve") {
  TokenLedger ledger;
  CallRecord record = make_record(0, 120, 40, 10);
  record.tagged_input_estimates = {{"system_prompt", 30}, {"other", 10}};
  record.tool_schemas_estimate = 5;
  record.produced_tool_calls = {"read_file", "run_simulation"};
  record.wrote_testbench = true;
  ledger.append(record);
  ledger.sample_curve(42.5);
  TokenLedger restored = TokenLedger::from_json(ledger.to_json());
  CHECK(restored.total_billed() == ledger.total_billed());
  REQUIRE(restored.records().size() == 1);
  CHECK(restored.records()[0].produced_tool_calls == record.produced_tool_calls);
  CHECK(restored.records()[0].tagged_input_estimates == record.tagged_input_estimates);
  REQUIRE(restored.curve().size() == 1);
  CHECK(restored.curve()[0].coverage_percent == doctest::Approx(42.5));
  CHECK(restored.curve()[0].cumulative_tokens == 170);
}

TEST_CASE("token report shares sum to one hundred percent") {
  TokenLedger ledger;
  CallRecord first = make_record(0, 997, 113, 41);
  first.tagged_input_estimates = {{"system_prompt", 300}, {"design_content", 211}, {"other", 97}};
  first.tool_schemas_estimate = 55;
  first.read_design = true;
  ledger.append(first);
  CallRecord second = make_record(1, 1301, 207, 0);
  second.tagged_input_estimates = {{"system_prompt", 300}, {"error_log", 512}, {"other", 140}};
  second.follows_error_log = true;
  ledger.append(second);
  Json report = tokens_report_json(ledger, 66.6, PricingTable{1.25, 10.0, 10.0});
  double share_sum = 0.0;
  long long category_sum = 0;
  for (const Json& entry : report.at("categories")) {
    share_sum += entry.at("share_percent").get<double>();
    category_sum += entry.at("total").get<long long>();
  }
  CHECK(share_sum == doctest::Approx(100.0).epsilon(0.0005));
  CHECK(category_sum == ledger.total_billed());
  CHECK(report.at("totals").at("billed").get<long long>() == ledger.total_billed());
}

TEST_CASE("allocation text lists all six categories with shares") {
  TokenLedger ledger;
  CallRecord record = make_record(0, 100, 50, 0);
  record.tagged_input_estimates = {{"system_prompt", 10}};
  record.wrote_testbench = true;
  ledger.append(record);
  const std::string text = allocation_text(ledger);
  CHECK(text.find("token allocation by category") != std::string::npos);
  for (TokenCategory category : all_categories()) {
    CHECK(text.find(to_string(category)) != std::string::npos);
  }
  CHECK(text.find("%") != std::string::npos);
}
