#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "lresnet/report.hpp"

using namespace lresnet;

TEST(Base64, KnownVectors) {
  // Reference strings from Python: base64.b64encode(struct.pack('<Nd', ...)).
  EXPECT_EQ(base64_encode_doubles(std::vector<double>{1.0}), "AAAAAAAA8D8=");
  EXPECT_EQ(base64_encode_doubles(std::vector<double>{-2.5, 3.141592653589793}), "AAAAAAAABMAYLURU+yEJQA==");
  EXPECT_EQ(base64_encode_doubles(std::vector<double>{0.0, -0.0, 1e-300}), "AAAAAAAAAAAAAAAAAAAAgFnz+MIfbqUB");
  EXPECT_EQ(base64_encode_doubles(std::vector<double>{}), "");
}

TEST(Base64, RoundTripIsBitExact) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<std::uint64_t> bits;
  for (std::size_t n = 0; n < 20; ++n) {
    std::vector<double> v(n);
    for (auto& x : v) {
      do {
        x = std::bit_cast<double>(bits(rng));
      } while (std::isnan(x));
    }
    const auto back = base64_decode_doubles(base64_encode_doubles(v));
    ASSERT_EQ(back.size(), n);
    for (std::size_t i = 0; i < n; ++i) ASSERT_EQ(std::bit_cast<std::uint64_t>(back[i]), std::bit_cast<std::uint64_t>(v[i]));
  }
  const auto inf = base64_decode_doubles(base64_encode_doubles(std::vector{std::numeric_limits<double>::infinity()}));
  EXPECT_TRUE(std::isinf(inf[0]));
}

TEST(Base64, RejectsMalformed) {
  EXPECT_THROW(base64_decode_doubles("AAA"), error);
  EXPECT_THROW(base64_decode_doubles("AAAAAAAA8D8==="), error);
}

TEST(Csv, Rfc4180Quoting) {
  EXPECT_EQ(csv_field("plain"), "plain");
  EXPECT_EQ(csv_field("a,b"), "\"a,b\"");
  EXPECT_EQ(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
  EXPECT_EQ(csv_field("two\nlines"), "\"two\nlines\"");
  EXPECT_EQ(csv_field("cr\r"), "\"cr\r\"");
  EXPECT_EQ(csv_field(""), "");
}

TEST(Csv, WriterUsesCrlfAndChecksWidth) {
  CsvWriter w({"a", "b"});
  w.row({"1", "x,y"});
  EXPECT_EQ(w.str(), "a,b\r\n1,\"x,y\"\r\n");
  EXPECT_THROW(w.row({"only"}), error);
  EXPECT_EQ(csv_number(std::numeric_limits<double>::quiet_NaN()), "nan");
  EXPECT_EQ(csv_number(-std::numeric_limits<double>::infinity()), "-inf");
  EXPECT_EQ(std::stod(csv_number(0.1)), 0.1);
}

TEST(Csv, PropertyRowQuotesMetric) {
  PropertyResult r;
  r.name = "lemma1";
  r.metric = "max (rhs - lhs) / rhs, worst";
  r.trials = 3;
  const auto s = property_csv({r});
  EXPECT_NE(s.find("\"max (rhs - lhs) / rhs, worst\""), std::string::npos);
  EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 2);
}

TEST(Json, PropertyReportCarriesSchemaAndWitness) {
  PropertyResult r;
  r.name = "validity";
  r.trials = 10;
  r.failures = 1;
  r.witness = {1.0};
  r.worst_violation = std::numeric_limits<double>::infinity();
  const auto j = property_report("validity", {r});
  EXPECT_EQ(j["schema_version"], report_schema_version);
  EXPECT_EQ(j["passed"], false);
  EXPECT_EQ(j["results"][0]["witness"], "AAAAAAAA8D8=");
  EXPECT_EQ(j["results"][0]["worst_violation"], "inf");
  const auto parsed = json::parse(j.dump());
  EXPECT_EQ(parsed["results"][0]["failures"], 1);
}

TEST(Json, OtherReportsCarrySchema) {
  TrainingCurve c;
  c.epochs.push_back({0, 1.0, 0.5});
  EXPECT_EQ(to_json(c, "lresnet", 4, 7)["schema_version"], report_schema_version);
  std::vector<OversmoothingRow> rows{{32, "none", std::nan(""), std::nan(""), true, "boom"}};
  const auto o = to_json(rows, 7);
  EXPECT_EQ(o["schema_version"], report_schema_version);
  EXPECT_EQ(o["rows"][0]["accuracy"], "nan");
  BenchReport b;
  EXPECT_EQ(to_json(b)["schema_version"], report_schema_version);
}
