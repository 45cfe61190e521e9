#include "foldsolve/io.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace foldsolve;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string &name) {
  const fs::path dir = fs::temp_directory_path() / ("foldsolve_io_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

} // namespace

TEST(FormatDouble, RoundTripsExactly) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> exp_dist(-300.0, 300.0), mant(-1.0, 1.0);
  for (int k = 0; k < 1000; ++k) {
    const double x = mant(rng) * std::pow(10.0, exp_dist(rng));
    EXPECT_EQ(parse_number(format_double(x)), x);
  }
  EXPECT_EQ(format_double(0.5), "0.5");
  EXPECT_EQ(format_double(NAN), "nan");
  EXPECT_EQ(format_double(-INFINITY), "-inf");
  EXPECT_TRUE(std::isnan(parse_number("nan")));
  EXPECT_THROW(parse_number("1.5x"), InvalidInput);
}

TEST(Csv, TableWithMetadataAndQuoting) {
  Table t{{"a", "b", "c"}, {}};
  t.rows.push_back({std::int64_t{3}, 0.25, std::string("x,y")});
  const std::string csv = table_to_csv(t, {{"seed", "7"}});
  EXPECT_EQ(csv, "# seed=7\na,b,c\n3,0.25,\"x,y\"\n");
}

TEST(Csv, TraceRoundTrip) {
  IterationTrace t;
  for (int k = 0; k < 5; ++k) {
    IterationRecord r;
    r.iter = k;
    r.err_to_ref = k == 0 ? NAN : 1.0 / (k + 3.0);
    r.step_norm = std::sqrt(k + 0.1);
    r.objective = 10.0 - k / 7.0;
    r.support_size = k;
    r.prox_calls = 3 * k;
    r.elapsed_seconds = 1e-3 * k;
    t.records.push_back(r);
  }
  const IterationTrace back = trace_from_csv(trace_to_csv(t));
  ASSERT_EQ(back.size(), t.size());
  for (std::size_t k = 0; k < t.size(); ++k) {
    const auto &a = t.records[k], &b = back.records[k];
    EXPECT_EQ(a.iter, b.iter);
    if (k == 0)
      EXPECT_TRUE(std::isnan(b.err_to_ref));
    else
      EXPECT_EQ(a.err_to_ref, b.err_to_ref);
    EXPECT_EQ(a.step_norm, b.step_norm);
    EXPECT_EQ(a.objective, b.objective);
    EXPECT_EQ(a.support_size, b.support_size);
    EXPECT_EQ(a.prox_calls, b.prox_calls);
    EXPECT_EQ(a.elapsed_seconds, b.elapsed_seconds);
  }
  EXPECT_THROW(trace_from_csv("x,y\n1,2\n"), InvalidInput);
  EXPECT_THROW(trace_from_csv(""), InvalidInput);
}

TEST(AtomicWrite, CreatesParentsAndReplaces) {
  const fs::path dir = scratch_dir("atomic");
  const fs::path file = dir / "nested" / "out.txt";
  atomic_write(file, "first");
  atomic_write(file, "second");
  EXPECT_EQ(read_file(file), "second");
  EXPECT_FALSE(fs::exists(fs::path(file) += ".tmp"));
  EXPECT_THROW(read_file(dir / "missing.txt"), ConfigError);
}

TEST(ConfigReader, TypeAndUnknownKeyErrorsNameTheField) {
  const Json j = Json::parse(R"({"a": 1, "b": "x", "nested": {"c": true, "extra": 2}})");
  ConfigReader r(j, "");
  EXPECT_EQ(r.get<int>("a", 0), 1);
  EXPECT_EQ(r.get<double>("missing", 2.5), 2.5);
  try {
    r.required<double>("b");
    FAIL();
  } catch (const ConfigError &e) {
    EXPECT_EQ(e.field(), "b");
  }
  ConfigReader nested = r.child("nested");
  EXPECT_TRUE(nested.required<bool>("c"));
  try {
    nested.finish();
    FAIL();
  } catch (const ConfigError &e) {
    EXPECT_EQ(e.field(), "nested.extra");
  }
  EXPECT_NO_THROW(r.finish());
  try {
    r.required<int>("nope");
    FAIL();
  } catch (const ConfigError &e) {
    EXPECT_EQ(e.field(), "nope");
  }
  const Json neg = Json::parse(R"({"n": -3})");
  ConfigReader rn(neg, "");
  EXPECT_THROW(rn.required<std::uint64_t>("n"), ConfigError);
  EXPECT_THROW(ConfigReader(Json::array(), "root"), ConfigError);
}

TEST(SpecJson, RoundTripThroughReader) {
  ExperimentSpec s = ExperimentSpec::preset(ExperimentName::vary_m);
  s.ms = {50, 70};
  s.seed = 99;
  s.ensemble = EnsembleKind::partial_circulant;
  const Json j = spec_to_json(s);
  ConfigReader r(j, "");
  const ExperimentSpec back = spec_from_json(r);
  r.finish();
  EXPECT_EQ(spec_to_json(back), j);
  EXPECT_EQ(spec_hash(back), spec_hash(s));
  s.seed = 100;
  EXPECT_NE(spec_hash(back), spec_hash(s));
}

TEST(SpecJson, PresetsFillMissingKeysAndInvalidValuesFail) {
  const Json j = Json::parse(R"({"experiment": "timing"})");
  ConfigReader r(j, "");
  EXPECT_EQ(spec_from_json(r).n, 1000);
  ConfigReader rp(j, "");
  EXPECT_EQ(spec_from_json(rp, true).n, 5000);
  for (const char *bad : {R"({"experiment": "vary-m", "ms": []})", R"({"experiment": "bogus"})",
                          R"({"experiment": "vary-beta", "betas": [0.1, -1]})",
                          R"({"experiment": "vary-beta", "ensemble": "hadamard"})",
                          R"({"experiment": "vary-beta", "ms": ["a"]})",
                          R"({"experiment": "vary-beta", "tail_fraction": 0})"}) {
    const Json b = Json::parse(bad);
    ConfigReader rb(b, "");
    EXPECT_THROW(spec_from_json(rb), ConfigError) << bad;
  }
}
