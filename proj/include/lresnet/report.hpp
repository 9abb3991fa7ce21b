#pragma once

// JSON and CSV serialization of reports. Witness point arrays are stored as
// base64 of their 64-bit little-endian IEEE-754 bytes.

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <boost/archive/iterators/base64_from_binary.hpp>
#include <boost/archive/iterators/binary_from_base64.hpp>
#include <boost/archive/iterators/transform_width.hpp>
#include <json.hpp>

#include "bench.hpp"
#include "errors.hpp"
#include "toynet.hpp"
#include "verify.hpp"

namespace lresnet {

inline constexpr int report_schema_version = 1;

using json = nlohmann::json;

inline std::string base64_encode_doubles(std::span<const double> values) {
  std::string bytes(values.size() * 8, '\0');
  for (std::size_t i = 0; i < values.size(); ++i) {
    auto bits = std::bit_cast<std::uint64_t>(values[i]);
    for (int b = 0; b < 8; ++b) {
      bytes[i * 8 + b] = char(bits & 0xff);
      bits >>= 8;
    }
  }
  using namespace boost::archive::iterators;
  using enc = base64_from_binary<transform_width<std::string::const_iterator, 6, 8>>;
  std::string out(enc(bytes.begin()), enc(bytes.end()));
  out.append((3 - bytes.size() % 3) % 3, '=');
  return out;
}

inline std::vector<double> base64_decode_doubles(const std::string& text) {
  std::string s = text;
  std::size_t pad = 0;
  while (!s.empty() && s.back() == '=') {
    s.pop_back();
    ++pad;
  }
  if (pad > 2 || (s.size() + pad) % 4 != 0) throw error("base64: malformed input");
  using namespace boost::archive::iterators;
  using dec = transform_width<binary_from_base64<std::string::const_iterator>, 8, 6>;
  std::string bytes;
  try {
    bytes.assign(dec(s.begin()), dec(s.end()));
  } catch (const std::exception&) {
    throw error("base64: invalid character");
  }
  bytes.resize(bytes.size() - bytes.size() % 8);
  std::vector<double> out(bytes.size() / 8);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint64_t bits = 0;
    for (int b = 7; b >= 0; --b) bits = (bits << 8) | std::uint8_t(bytes[i * 8 + b]);
    out[i] = std::bit_cast<double>(bits);
  }
  return out;
}

namespace detail {

// Non-finite numbers become strings so the document stays valid JSON.
inline json number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

}  // namespace detail

inline json to_json(const PropertyResult& r) {
  json j{{"name", r.name},
         {"passed", r.passed()},
         {"trials", r.trials},
         {"failures", r.failures},
         {"worst_violation", detail::number(r.worst_violation)},
         {"tolerance", r.tolerance},
         {"metric", r.metric},
         {"seed", r.seed},
         {"precision", r.precision},
         {"curvature", r.curvature},
         {"dim", r.dim},
         {"sigma", r.sigma},
         {"method", r.method},
         {"boundary_cases", r.boundary_cases},
         {"construction_violations", r.construction_violations},
         {"noncommuting_pairs", r.noncommuting_pairs},
         {"witness", base64_encode_doubles(r.witness)}};
  json vw = json::array();
  for (const auto& w : r.violation_witnesses) vw.push_back(base64_encode_doubles(w));
  j["violation_witnesses"] = std::move(vw);
  return j;
}

inline json property_report(const std::string& suite, const std::vector<PropertyResult>& results) {
  json rs = json::array();
  bool all = true;
  for (const auto& r : results) {
    rs.push_back(to_json(r));
    all = all && r.passed();
  }
  return json{{"schema_version", report_schema_version}, {"kind", "verify"}, {"suite", suite}, {"passed", all},
              {"results", std::move(rs)}};
}

inline json to_json(const BenchReport& r) {
  const auto& c = r.config;
  json methods = json::array();
  for (const auto& t : r.timings) {
    methods.push_back({{"method", t.method},
                       {"median_seconds", t.median_seconds},
                       {"per_addition_seconds", t.per_addition_seconds},
                       {"ratio_to_lresnet", t.ratio_to_lresnet},
                       {"samples", t.samples},
                       {"max_membership_residual", t.max_membership_residual}});
  }
  return json{{"schema_version", report_schema_version},
              {"kind", "bench"},
              {"config",
               {{"dim", c.dim},
                {"batch", c.batch},
                {"curvature", c.curvature},
                {"precision", c.precision},
                {"iterations", c.iterations},
                {"warmup", c.warmup},
                {"repeats", c.repeats},
                {"seed", c.seed},
                {"sigma", c.sigma}}},
              {"environment",
               {{"threads", r.threads_used},
                {"comparable", r.comparable},
                {"hardware_threads", r.hardware_threads},
                {"compiler", r.compiler},
                {"bytes_required", r.bytes_required}}},
              {"methods", std::move(methods)}};
}

inline json to_json(const TrainingCurve& c, const std::string& method, std::size_t layers, std::uint64_t seed) {
  json epochs = json::array();
  for (const auto& e : c.epochs) epochs.push_back({{"epoch", e.epoch}, {"loss", detail::number(e.loss)}, {"accuracy", e.accuracy}});
  return json{{"schema_version", report_schema_version},
              {"kind", "train"},
              {"method", method},
              {"layers", layers},
              {"seed", seed},
              {"final_loss", detail::number(c.final_loss)},
              {"final_accuracy", c.final_accuracy},
              {"monotone", c.monotone},
              {"epochs", std::move(epochs)}};
}

inline json to_json(const std::vector<OversmoothingRow>& rows, std::uint64_t seed) {
  json rs = json::array();
  for (const auto& r : rows) {
    rs.push_back({{"depth", r.depth},
                  {"method", r.method},
                  {"accuracy", detail::number(r.accuracy)},
                  {"mean_pairwise_distance", detail::number(r.mean_pairwise_distance)},
                  {"nan", r.nan},
                  {"diagnostic", r.diagnostic}});
  }
  return json{{"schema_version", report_schema_version}, {"kind", "oversmoothing"}, {"seed", seed}, {"rows", std::move(rs)}};
}

// RFC 4180: fields with comma, quote, CR or LF are quoted, quotes doubled,
// records end in CRLF.
inline std::string csv_field(const std::string& f) {
  if (f.find_first_of(",\"\r\n") == std::string::npos) return f;
  std::string out = "\"";
  for (char ch : f) {
    if (ch == '"') out += '"';
    out += ch;
  }
  out += '"';
  return out;
}

inline std::string csv_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header) : cols_(header.size()) { row(header); }

  void row(const std::vector<std::string>& fields) {
    if (fields.size() != cols_) throw error("csv: row has " + std::to_string(fields.size()) + " fields, expected " + std::to_string(cols_));
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out_ += ',';
      out_ += csv_field(fields[i]);
    }
    out_ += "\r\n";
  }

  const std::string& str() const noexcept { return out_; }

 private:
  std::size_t cols_;
  std::string out_;
};

inline std::string property_csv(const std::vector<PropertyResult>& results) {
  CsvWriter w({"name", "method", "passed", "trials", "failures", "worst_violation", "tolerance", "metric", "seed",
               "precision", "curvature", "dim", "sigma", "boundary_cases", "construction_violations"});
  for (const auto& r : results) {
    w.row({r.name, r.method, r.passed() ? "true" : "false", std::to_string(r.trials), std::to_string(r.failures),
           csv_number(r.worst_violation), csv_number(r.tolerance), r.metric, std::to_string(r.seed),
           std::to_string(r.precision), csv_number(r.curvature), std::to_string(r.dim), csv_number(r.sigma),
           std::to_string(r.boundary_cases), std::to_string(r.construction_violations)});
  }
  return w.str();
}

inline std::string bench_csv(const BenchReport& r) {
  CsvWriter w({"method", "dim", "batch", "precision", "iterations", "threads", "median_seconds", "per_addition_seconds",
               "ratio_to_lresnet"});
  for (const auto& t : r.timings) {
    w.row({t.method, std::to_string(r.config.dim), std::to_string(r.config.batch), std::to_string(r.config.precision),
           std::to_string(r.config.iterations), std::to_string(r.threads_used), csv_number(t.median_seconds),
           csv_number(t.per_addition_seconds), csv_number(t.ratio_to_lresnet)});
  }
  return w.str();
}

inline std::string curve_csv(const TrainingCurve& c) {
  CsvWriter w({"epoch", "loss", "accuracy"});
  for (const auto& e : c.epochs) w.row({std::to_string(e.epoch), csv_number(e.loss), csv_number(e.accuracy)});
  return w.str();
}

inline std::string oversmoothing_csv(const std::vector<OversmoothingRow>& rows) {
  CsvWriter w({"depth", "method", "accuracy", "mean_pairwise_distance", "nan"});
  for (const auto& r : rows) {
    w.row({std::to_string(r.depth), r.method, csv_number(r.accuracy), csv_number(r.mean_pairwise_distance),
           r.nan ? "true" : "false"});
  }
  return w.str();
}

}  // namespace lresnet
