#include <gtest/gtest.h>

#include <sstream>

#include "oedkit/cli.hpp"
#include "oedkit/config.hpp"
#include "oedkit/csv.hpp"

using namespace oedkit;

namespace {

Config parse(const std::string& text) {
  std::istringstream in(text);
  return Config::parse(in);
}

}  // namespace

TEST(Config, SectionsCommentsAndLists) {
  const Config c = parse(
      "# comment\n"
      "model = bod\n"
      "; another\n"
      "\n"
      "[design]\n"
      "starts = 4\n"
      "lower = 1, 2.5\n"
      "scale_parameters = false\n"
      "[prior]\n"
      "covariance = cov.csv\n");
  EXPECT_EQ(c.get("model"), "bod");
  EXPECT_EQ(c.get_int("design.starts", 0), 4);
  EXPECT_EQ(c.get_list("design.lower"), (std::vector<double>{1.0, 2.5}));
  EXPECT_FALSE(c.get_bool("design.scale_parameters", true));
  EXPECT_EQ(c.get("prior.covariance"), "cov.csv");
  EXPECT_TRUE(c.unknown_keys(cli::config_keys()).empty());
}

TEST(Config, DottedKeysEqualSections) {
  const Config a = parse("design.seed = 3\n");
  const Config b = parse("[design]\nseed = 3\n");
  EXPECT_EQ(a.get("design.seed"), b.get("design.seed"));
}

TEST(Config, Errors) {
  EXPECT_THROW(parse("model bod\n"), Error);
  EXPECT_THROW(parse("[design\n"), Error);
  EXPECT_THROW(parse("a = 1\na = 2\n"), Error);
  EXPECT_THROW(parse("bad key = 1\n"), Error);
  EXPECT_THROW(parse("x = 1.5\n").get_int("x", 0), Error);
  EXPECT_THROW(parse("x = maybe\n").get_bool("x", false), Error);
  EXPECT_EQ(parse("typo = 1\n").unknown_keys(cli::config_keys()), std::vector<std::string>{"typo"});
}

TEST(Csv, SeventeenDigitsRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, 20.314107744648787, -1e-300, 6.02214076e23}) {
    EXPECT_EQ(csv::parse_double(csv::fmt(v), "x"), v);
  }
  EXPECT_EQ(csv::fmt(std::nan("")), "nan");
}

TEST(Csv, WriterChecksWidth) {
  csv::Writer w({"a", "b"});
  w.row({"1", "2"});
  EXPECT_THROW(w.row({"1"}), Error);
  EXPECT_EQ(w.str(), "a,b\n1,2\n");
}

TEST(Cli, GridSpec) {
  EXPECT_EQ(cli::parse_grid("1:10:0.01").size(), 901u);
  EXPECT_THROW(cli::parse_grid("1:10"), Error);
  EXPECT_THROW(cli::parse_grid("1:x:0.1"), Error);
}

TEST(Cli, RunContextValidation) {
  Config c = parse("model = bod\n");
  const cli::RunContext ctx(c, ".");
  const LabeledExperiment e = ctx.experiment();
  EXPECT_THROW(ctx.theta(e, true), Error);
  EXPECT_EQ(ctx.theta(e, false), e.nominal_parameters);
  EXPECT_THROW(cli::RunContext(parse("modle = bod\n"), "."), Error);
  EXPECT_THROW(cli::RunContext(parse("model = external-table\n"), ".").experiment(), Error);
}
