#include <doctest.h>

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "krrstream/stream.hpp"
#include "support.hpp"

using krr::Dataset;
using krr::ModelConfig;
using krr::ReportFormat;
using krr::RoundReport;
using krr::Space;
using krr::StreamPlan;
using krr::Strategy;

namespace {

ModelConfig poly2_config() {
  ModelConfig config{krr::KernelSpec::polynomial(2), 0.5, {}};
  return config;
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(line.substr(start, comma == std::string::npos
                                            ? std::string::npos
                                            : comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return fields;
}

}  // namespace

TEST_SUITE("stream") {

TEST_CASE("membership follows the plan arithmetic") {
  const Dataset data = krr::synthesize(100, 3, 1.0, 5);
  StreamPlan plan;
  plan.train_fraction = 0.8;
  plan.rounds = 5;
  plan.adds_per_round = 4;
  plan.removes_per_round = 2;
  plan.seed = 11;
  plan.space = Space::Empirical;

  const auto reports = krr::run_stream(data, plan, poly2_config());
  REQUIRE_EQ(reports.size(), 5);
  // test split 20, arrival pool 20, initial fit on 60; each round nets +2.
  for (std::size_t i = 0; i < reports.size(); ++i) {
    CHECK_EQ(reports[i].round, static_cast<int>(i) + 1);
    CHECK_EQ(reports[i].sample_count, 60 + 2 * static_cast<Eigen::Index>(i + 1));
    CHECK(reports[i].batch.has_value());
    CHECK(reports[i].single.has_value());
    CHECK(reports[i].refit.has_value());
    CHECK_LT(reports[i].deviation, 1e-8);
    CHECK(reports[i].sign_parity);
    CHECK_GE(reports[i].batch->accuracy, 0.0);
    CHECK_LE(reports[i].batch->accuracy, 1.0);
  }
}

TEST_CASE("the seed fixes the stream") {
  const Dataset data = krr::synthesize(80, 2, 1.0, 6);
  StreamPlan plan;
  plan.rounds = 4;
  plan.adds_per_round = 3;
  plan.removes_per_round = 1;
  plan.seed = 21;
  plan.space = Space::Intrinsic;

  const auto first = krr::run_stream(data, plan, poly2_config());
  const auto second = krr::run_stream(data, plan, poly2_config());
  plan.seed = 22;
  const auto other = krr::run_stream(data, plan, poly2_config());

  REQUIRE_EQ(first.size(), second.size());
  bool same_path = true;
  bool other_path = false;
  for (std::size_t i = 0; i < first.size(); ++i) {
    CHECK_EQ(first[i].sample_count, second[i].sample_count);
    CHECK_EQ(first[i].deviation, second[i].deviation);
    CHECK_EQ(first[i].batch->accuracy, second[i].batch->accuracy);
    same_path = same_path && first[i].refit->accuracy == second[i].refit->accuracy;
    other_path = other_path || first[i].deviation != other[i].deviation;
  }
  CHECK(same_path);
  CHECK(other_path);
}

TEST_CASE("every space stays pinned to its refit oracle") {
  const Dataset data = krr::synthesize(90, 2, 1.0, 7);
  StreamPlan plan;
  plan.rounds = 6;
  plan.adds_per_round = 3;
  plan.removes_per_round = 2;
  plan.seed = 31;
  for (const Space space : {Space::Intrinsic, Space::Empirical, Space::Bayes}) {
    plan.space = space;
    const auto reports = krr::run_stream(data, plan, poly2_config());
    for (const RoundReport& r : reports) {
      CHECK_LT(r.deviation, 1e-8);
      CHECK(r.sign_parity);
    }
  }
}

TEST_CASE("an oversized plan is rejected up front") {
  const Dataset data = krr::synthesize(30, 2, 1.0, 8);
  StreamPlan plan;
  plan.train_fraction = 0.8;
  plan.rounds = 10;
  plan.adds_per_round = 4;
  plan.removes_per_round = 0;
  CHECK_THROWS_AS(krr::run_stream(data, plan, poly2_config()), krr::PlanExhausted);
}

TEST_CASE("mid-stream exhaustion names the failing round") {
  const Dataset data = krr::synthesize(40, 2, 1.0, 9);
  StreamPlan plan;
  plan.train_fraction = 1.0;
  plan.rounds = 3;
  plan.adds_per_round = 0;
  plan.removes_per_round = 16;
  plan.seed = 41;
  plan.space = Space::Empirical;
  try {
    krr::run_stream(data, plan, poly2_config());
    FAIL("expected StreamRoundError");
  } catch (const krr::StreamRoundError& e) {
    CHECK_EQ(e.round(), 3);
    CHECK(std::string(e.what()).find("round 3") != std::string::npos);
  }
}

TEST_CASE("plan validation") {
  const Dataset data = krr::synthesize(50, 2, 1.0, 10);
  StreamPlan plan;
  plan.train_fraction = 0.0;
  CHECK_THROWS_AS(krr::run_stream(data, plan, poly2_config()), krr::Error);
  plan.train_fraction = 1.5;
  CHECK_THROWS_AS(krr::run_stream(data, plan, poly2_config()), krr::Error);
  plan.train_fraction = 0.8;
  plan.rounds = -1;
  CHECK_THROWS_AS(krr::run_stream(data, plan, poly2_config()), krr::Error);
}

TEST_CASE("csv report shape") {
  const Dataset data = krr::synthesize(70, 2, 1.0, 12);
  StreamPlan plan;
  plan.rounds = 3;
  plan.adds_per_round = 3;
  plan.removes_per_round = 1;
  plan.seed = 51;
  plan.space = Space::Empirical;
  const auto reports = krr::run_stream(data, plan, poly2_config());
  const auto lines = split_lines(krr::render_report(reports, ReportFormat::Csv));

  REQUIRE_EQ(lines.size(), 5);
  CHECK_EQ(lines[0],
           "round,n,batch_seconds,single_seconds,refit_seconds,"
           "batch_log10_cum,single_log10_cum,refit_log10_cum,deviation,"
           "batch_accuracy,single_accuracy,refit_accuracy,sign_parity,"
           "improvement_fold");
  for (std::size_t i = 0; i < lines.size(); ++i) {
    CHECK_EQ(split_fields(lines[i]).size(), 14);
  }
  for (std::size_t i = 1; i <= 3; ++i) {
    const auto fields = split_fields(lines[i]);
    CHECK_EQ(fields[0], std::to_string(i));
    CHECK_FALSE(fields[2].empty());
    CHECK_EQ(fields[12], "true");
    CHECK(fields[13].empty());
  }
  const auto trailer = split_fields(lines[4]);
  CHECK_EQ(trailer[0], "summary");
  CHECK(trailer[1].empty());
  CHECK_FALSE(trailer[2].empty());
  CHECK_FALSE(trailer[13].empty());
  CHECK_GT(std::stod(trailer[13]), 0.0);
}

TEST_CASE("json report shape") {
  const Dataset data = krr::synthesize(70, 2, 1.0, 13);
  StreamPlan plan;
  plan.rounds = 3;
  plan.adds_per_round = 3;
  plan.removes_per_round = 1;
  plan.seed = 61;
  plan.space = Space::Intrinsic;
  const auto reports = krr::run_stream(data, plan, poly2_config());
  const auto doc =
      nlohmann::json::parse(krr::render_report(reports, ReportFormat::Json));

  REQUIRE(doc.contains("rounds"));
  REQUIRE(doc.contains("summary"));
  REQUIRE_EQ(doc["rounds"].size(), 3);
  for (const auto& row : doc["rounds"]) {
    CHECK(row.contains("round"));
    CHECK(row.contains("n"));
    CHECK(row["batch"].is_object());
    CHECK(row["single"].is_object());
    CHECK(row["refit"].is_object());
    CHECK(row["batch"].contains("seconds"));
    CHECK(row["batch"].contains("log10_cumulative"));
    CHECK(row["batch"].contains("accuracy"));
    CHECK(row["deviation"].is_number());
    CHECK(row["sign_parity"].is_boolean());
  }
  CHECK_EQ(doc["summary"]["rounds"], 3);
  CHECK(doc["summary"]["mean_seconds"]["batch"].is_number());
  CHECK(doc["summary"]["mean_seconds"]["single"].is_number());
  CHECK(doc["summary"]["mean_seconds"]["refit"].is_number());
  CHECK(doc["summary"]["improvement_fold"].is_number());
}

TEST_CASE("partial strategy selections leave gaps, not zeros") {
  const Dataset data = krr::synthesize(70, 2, 1.0, 14);
  StreamPlan plan;
  plan.rounds = 2;
  plan.adds_per_round = 2;
  plan.removes_per_round = 1;
  plan.seed = 71;
  plan.space = Space::Empirical;
  plan.strategy = Strategy::Batch;

  const auto reports = krr::run_stream(data, plan, poly2_config());
  for (const RoundReport& r : reports) {
    CHECK(r.batch.has_value());
    CHECK_FALSE(r.single.has_value());
    CHECK_FALSE(r.refit.has_value());
    CHECK_LT(r.deviation, 1e-8);
  }
  const auto doc =
      nlohmann::json::parse(krr::render_report(reports, ReportFormat::Json));
  CHECK(doc["rounds"][0]["single"].is_null());
  CHECK(doc["rounds"][0]["refit"].is_null());
  // The fold needs both incremental chains.
  CHECK(doc["summary"]["improvement_fold"].is_null());
  CHECK(doc["summary"]["mean_seconds"]["single"].is_null());

  const auto lines = split_lines(krr::render_report(reports, ReportFormat::Csv));
  const auto fields = split_fields(lines[1]);
  CHECK_FALSE(fields[2].empty());
  CHECK(fields[3].empty());
  CHECK(fields[4].empty());
  const auto trailer = split_fields(lines.back());
  CHECK(trailer[13].empty());
}

TEST_CASE("a full train fraction leaves accuracy unreported") {
  const Dataset data = krr::synthesize(60, 2, 1.0, 15);
  StreamPlan plan;
  plan.train_fraction = 1.0;
  plan.rounds = 2;
  plan.adds_per_round = 2;
  plan.removes_per_round = 0;
  plan.seed = 81;
  plan.space = Space::Empirical;

  const auto reports = krr::run_stream(data, plan, poly2_config());
  for (const RoundReport& r : reports) {
    CHECK(std::isnan(r.batch->accuracy));
    CHECK(r.sign_parity);
  }
  const auto doc =
      nlohmann::json::parse(krr::render_report(reports, ReportFormat::Json));
  CHECK(doc["rounds"][0]["batch"]["accuracy"].is_null());
  const auto lines = split_lines(krr::render_report(reports, ReportFormat::Csv));
  CHECK(split_fields(lines[1])[9].empty());
}

TEST_CASE("empty reports are rejected") {
  CHECK_THROWS_AS(krr::render_report({}, ReportFormat::Csv), krr::Error);
  CHECK_THROWS_AS(krr::render_report({}, ReportFormat::Json), krr::Error);
}

}  // TEST_SUITE
