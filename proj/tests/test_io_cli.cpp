#include <gtest/gtest.h>

#include <clocale>
#include <sstream>

#include "gaussnet/cli.hpp"
#include "gaussnet/io.hpp"

using namespace gaussnet;

namespace {

GaussianState parse(const std::string& text) {
  std::istringstream in(text);
  return io::parse_cov_matrix(in);
}

std::string parse_error(const std::string& text) {
  try {
    parse(text);
  } catch (const ParseError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(FormatNumber, SixSignificantDigits) {
  EXPECT_EQ(io::format_number(0.7014403), "0.70144");
  EXPECT_EQ(io::format_number(1.2391764), "1.23918");
  EXPECT_EQ(io::format_number(0.0), "0");
  EXPECT_EQ(io::format_number(-0.0), "0");
  EXPECT_EQ(io::format_number(1.0), "1");
  EXPECT_EQ(io::format_number(1e-9), "1e-09");
  EXPECT_EQ(io::format_number(std::numeric_limits<double>::infinity()), "inf");
  EXPECT_EQ(io::round_significant(0.12345678), 0.123457);
}

TEST(FormatNumber, LocaleIndependent) {
  const char* old = std::setlocale(LC_NUMERIC, nullptr);
  const std::string saved = old ? old : "C";
  if (std::setlocale(LC_NUMERIC, "de_DE.UTF-8") != nullptr) {
    EXPECT_EQ(io::format_number(0.5), "0.5");
    std::setlocale(LC_NUMERIC, saved.c_str());
  }
  EXPECT_EQ(io::format_number(2.5), "2.5");
}

TEST(CovMatrixFile, ParsesLabelsAndDefaults) {
  const auto s = parse("# labels: A B0\n1 0 0.5 0\n0 1 0 -0.5\n0.5 0 1 0\n0 -0.5 0 1\n");
  EXPECT_EQ(s.labels(), (std::vector<std::string>{"A", "B0"}));
  EXPECT_EQ(s.cov()(0, 2), 0.5);
  const auto d = parse("\n  2 0\n0   2\n\n");
  EXPECT_EQ(d.labels(), (std::vector<std::string>{"1"}));
  EXPECT_EQ(parse("# measured\n1 0\n0 1\n").n_modes(), 1u);
}

TEST(CovMatrixFile, DistinctErrors) {
  EXPECT_NE(parse_error("1 0\n0 x\n").find("cannot parse"), std::string::npos);
  EXPECT_NE(parse_error("1 0 0\n0 1 0\n").find("not square"), std::string::npos);
  EXPECT_NE(parse_error("1 0 0\n0 1 0\n0 0 1\n").find("odd"), std::string::npos);
  EXPECT_NE(parse_error("1 0.1\n0 1\n").find("not symmetric"), std::string::npos);
  EXPECT_NE(parse_error("# labels: A B\n1 0\n0 1\n").find("labels header"), std::string::npos);
  EXPECT_NE(parse_error("# labels: A A\n1 0 0 0\n0 1 0 0\n0 0 1 0\n0 0 0 1\n").find("duplicate"),
            std::string::npos);
  EXPECT_NE(parse_error("").find("no matrix"), std::string::npos);
  EXPECT_EQ(parse_error("1 5e-7\n0 1\n"), "");
}

TEST(CovMatrixFile, RoundTrip) {
  ProtocolParams p;
  p.users = Users::three;
  p.f_b = 1.239;
  p.f_d = 1.752;
  const auto s = build_network_state(p, Stage::pre_david);
  std::ostringstream os;
  io::write_cov_matrix(os, s);
  const auto back = parse(os.str());
  EXPECT_EQ(back.labels(), s.labels());
  EXPECT_LT((back.cov() - s.cov()).cwiseAbs().maxCoeff(), 1e-9);
  const auto r1 = cli::certify(s, {});
  const auto r2 = cli::certify(back, {});
  EXPECT_EQ(r1.dump(), r2.dump());
}

TEST(SplitSpec, Grammar) {
  const auto s = io::parse_split_spec(" A | B0 , C1 ");
  EXPECT_EQ(s.steering, (std::vector<std::string>{"A"}));
  EXPECT_EQ(s.steered, (std::vector<std::string>{"B0", "C1"}));
  EXPECT_THROW(io::parse_split_spec("A,B0"), ParseError);
  EXPECT_THROW(io::parse_split_spec("A|B|C"), ParseError);
  EXPECT_THROW(io::parse_split_spec("A|"), ParseError);
  EXPECT_THROW(io::parse_split_spec("A|B,,C"), ParseError);
}

TEST(SplitSpec, Resolve) {
  const auto st = vacuum({"A", "B0", "C1"});
  const auto p = io::resolve_split(st, io::parse_split_spec("C1|A"));
  EXPECT_EQ(p.steering, (std::vector<std::size_t>{2}));
  EXPECT_EQ(p.steered, (std::vector<std::size_t>{0}));
  const auto w = io::resolve_split(st, io::parse_split_spec("B0|*"));
  EXPECT_EQ(w.steered, (std::vector<std::size_t>{0, 2}));
  EXPECT_THROW(io::resolve_split(st, io::parse_split_spec("A|X")), ParseError);
  EXPECT_THROW(io::resolve_split(st, io::parse_split_spec("A|A")), ParseError);
  EXPECT_THROW(io::resolve_split(st, io::parse_split_spec("*|*")), ParseError);
}

TEST(KeyValues, ParsesAndRejects) {
  std::istringstream in("# comment\nscenario = qss\n\neta_grid=1:0.5:3  # trailing\n");
  const auto kv = io::parse_key_values(in);
  ASSERT_EQ(kv.size(), 2u);
  EXPECT_EQ(kv[0], (std::pair<std::string, std::string>{"scenario", "qss"}));
  EXPECT_EQ(kv[1].second, "1:0.5:3");
  std::istringstream bad("scenario qss\n");
  EXPECT_THROW(io::parse_key_values(bad), InvalidArgument);
}

TEST(EtaGrid, ParseAndValues) {
  const auto g = cli::EtaGrid::parse("1:0.1:10");
  const auto v = g.values();
  ASSERT_EQ(v.size(), 10u);
  EXPECT_EQ(v.front(), 1.0);
  EXPECT_EQ(v.back(), 0.1);
  EXPECT_NEAR(v[1], 0.9, 1e-15);
  EXPECT_EQ(cli::EtaGrid::parse("0.5:0:1").values(), std::vector<double>{0.5});
  EXPECT_THROW(cli::EtaGrid::parse("1:0.1"), InvalidArgument);
  EXPECT_THROW(cli::EtaGrid::parse("1.2:0:3"), InvalidArgument);
  EXPECT_THROW(cli::EtaGrid::parse("1:0:0"), InvalidArgument);
  EXPECT_THROW(cli::EtaGrid::parse("1:0:x"), InvalidArgument);
}

TEST(RunConfig, AssignmentsAndOverrides) {
  cli::RunConfig c;
  c.apply("scenario", "three_user");
  c.apply_assignment("v_dis = 2");
  c.apply_assignment("f_b=1.1");
  c.apply("seed", "99");
  EXPECT_EQ(c.scenario, cli::Scenario::three_user);
  EXPECT_TRUE(c.overridden("f_b"));
  EXPECT_FALSE(c.overridden("f_d"));
  EXPECT_EQ(c.seed, 99u);
  EXPECT_THROW(c.apply("nonsense", "1"), InvalidArgument);
  EXPECT_THROW(c.apply("eta_sb", "abc"), InvalidArgument);
  EXPECT_THROW(c.apply("scenario", "four_user"), InvalidArgument);
  EXPECT_THROW(c.apply_assignment("v_dis"), InvalidArgument);
  const auto p = cli::scenario_params(c, 0.5).params;
  EXPECT_EQ(p.v_dis, 2.0);
  EXPECT_EQ(p.f_b, 1.1);
  EXPECT_NEAR(p.f_d, optimal_fd(0.5, p.v_a, p.v_s), 1e-15);
}

TEST(SetParam, EveryField) {
  ProtocolParams p;
  const std::vector<std::string> keys{"v_s", "v_a", "v_dis", "t1", "t2", "t3", "eta_sa", "eta_sb", "eta_sd",
                                      "eta_ab", "eta_bd", "f_a", "f_b", "f_c", "f_d"};
  for (const auto& k : keys) EXPECT_NO_THROW(cli::set_param(p, k, 0.5)) << k;
  EXPECT_EQ(p.eta_bd, 0.5);
  cli::set_param(p, "squeezing_db", 10);
  EXPECT_NEAR(p.v_s, 0.1, 1e-15);
}

TEST(Scan, TwoUserColumnsAndShape) {
  cli::RunConfig c;
  c.grid = cli::EtaGrid::parse("1:0.1:3");
  c.grid.steps = 3;
  c.grid.start = 1.0;
  c.grid.stop = 0.1;
  const auto t = cli::run_scan(c);
  EXPECT_EQ(t.columns, (std::vector<std::string>{"eta", "f_b", "ppt_A|B", "g_A->B", "g_B->A", "ppt_C1|AB0"}));
  ASSERT_EQ(t.rows.size(), 3u);
  EXPECT_GT(t.at(0, "g_A->B"), t.at(1, "g_A->B"));
  EXPECT_GT(t.at(1, "g_A->B"), t.at(2, "g_A->B"));
  EXPECT_GT(t.at(2, "g_A->B"), 0.0);
  for (std::size_t r = 0; r < 3; ++r) {
    EXPECT_EQ(t.at(r, "g_B->A"), 0.0);
    EXPECT_NEAR(t.at(r, "f_b"), 1.239, 1e-3);
  }
}

TEST(Scan, ThreeUserAndQss) {
  cli::RunConfig c;
  c.scenario = cli::Scenario::three_user;
  c.grid = cli::EtaGrid::parse("1:0:11");
  const auto t = cli::run_scan(c);
  EXPECT_EQ(t.at(0, "g_B->D"), 0.0);
  EXPECT_NEAR(t.at(0, "f_d"), 1.752, 1e-3);
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    EXPECT_GE(t.at(r, "g_A->BD") + 1e-12, std::max(t.at(r, "g_A->B"), t.at(r, "g_A->D")));
  }
  EXPECT_EQ(t.at(10, "g_A->BD"), 0.0);

  c.scenario = cli::Scenario::qss;
  c.grid = cli::EtaGrid::parse("1:0.7:31");
  const auto q = cli::run_scan(c);
  double first_zero = -1;
  for (std::size_t r = 0; r < q.rows.size(); ++r) {
    if (q.at(r, "g_BD->A") == 0.0) {
      first_zero = q.at(r, "eta");
      break;
    }
  }
  EXPECT_NEAR(first_zero, 0.79, 0.011);
}

TEST(Scan, NumericFallbackOutsideClosedFormRegime) {
  cli::RunConfig c;
  c.grid = cli::EtaGrid::parse("0.9:0.9:1");
  c.apply("t1", "0.4");
  const auto pp = cli::scenario_params(c, 0.9);
  EXPECT_EQ(pp.method, SearchMethod::golden_section);
  EXPECT_GT(pp.params.f_b, 0.0);
}

TEST(Scan, OutputFormats) {
  cli::Table t{"x", {"eta", "g"}, {{1.0, 0.0627748123}, {0.5, std::numeric_limits<double>::infinity()}}};
  std::ostringstream csv;
  cli::write_table(csv, t, cli::OutputFormat::csv);
  EXPECT_EQ(csv.str(), "eta,g\n1,0.0627748\n0.5,inf\n");
  std::ostringstream js;
  cli::write_table(js, t, cli::OutputFormat::json);
  const auto doc = cli::Json::parse(js.str());
  EXPECT_EQ(doc["rows"][0]["g"].get<double>(), 0.0627748);
  EXPECT_TRUE(doc["rows"][1]["g"].is_null());
}

TEST(Certify, MeasuredMatrices) {
  const auto r = cli::certify_file(GAUSSNET_TEST_DATA "/sigma_ab0c1.txt", {});
  EXPECT_TRUE(r["physical"].get<bool>());
  EXPECT_NEAR(r["splits"][0]["ppt"].get<double>(), 0.701, 0.01);
  EXPECT_NEAR(r["splits"][1]["ppt"].get<double>(), 1.182, 0.01);
  EXPECT_NEAR(r["splits"][2]["ppt"].get<double>(), 1.264, 0.01);
  EXPECT_EQ(r["splits"][0]["verdict"], "inseparable");

  const auto r4 = cli::certify_file(GAUSSNET_TEST_DATA "/sigma_abc2d0.txt", {"C2|*"});
  EXPECT_FALSE(r4["physical"].get<bool>());
  EXPECT_EQ(r4["splits"][0]["split"], "C2|A,B,D0");
  EXPECT_NEAR(r4["splits"][0]["ppt"].get<double>(), 1.177, 0.01);

  EXPECT_THROW(cli::certify_file(GAUSSNET_TEST_DATA "/sigma_abc2d0_printed.txt", {}), ParseError);
  EXPECT_THROW(cli::certify_file(GAUSSNET_TEST_DATA "/does_not_exist.txt", {}), ParseError);
  EXPECT_THROW(cli::certify_file(GAUSSNET_TEST_DATA "/sigma_ab0c1.txt", {"A|Q"}), ParseError);
}

TEST(Certify, IdentityIsSeparable) {
  const auto r = cli::certify(GaussianState(Matrix::Identity(4, 4)), {});
  for (const auto& s : r["splits"]) {
    EXPECT_EQ(s["verdict"], "separable");
    for (const auto& [k, v] : s["steering"].items()) EXPECT_EQ(v.get<double>(), 0.0) << k;
  }
}

TEST(Certify, NonPositiveDefiniteIsNumericalFailure) {
  Matrix m = Matrix::Identity(4, 4);
  m(0, 0) = -1.0;
  EXPECT_THROW(cli::certify(GaussianState(m), {}), NumericalError);
}

TEST(DisplacementTable, RowsAndFormatting) {
  const auto rows = cli::table_a1();
  ASSERT_EQ(rows.size(), 5u);
  const double fd[] = {1.752, 1.567, 1.357, 1.108, 0.784};
  for (std::size_t k = 0; k < 5; ++k) {
    EXPECT_NEAR(rows[k].f_b, 1.239, 1e-3);
    EXPECT_NEAR(rows[k].f_d, fd[k], 1e-3);
  }
  std::ostringstream os;
  cli::write_table_a1(os, rows, cli::OutputFormat::csv);
  EXPECT_EQ(os.str(),
            "eta,f_b,f_d\n1.000,1.239,1.752\n0.800,1.239,1.567\n0.600,1.239,1.357\n0.400,1.239,1.108\n"
            "0.200,1.239,0.784\n");
}

TEST(MonteCarlo, SmallSampleDoesNotCrash) {
  cli::RunConfig c;
  c.shots = 10;
  c.seed = 3;
  const auto r = cli::montecarlo(c);
  EXPECT_GT(r["max_abs_deviation"].get<double>(), 0.0);
  EXPECT_EQ(r["shots"].get<std::size_t>(), 10u);
  EXPECT_EQ(cli::montecarlo(c).dump(), r.dump());
}

TEST(MonteCarlo, ThreeUserStageOverride) {
  cli::RunConfig c;
  c.scenario = cli::Scenario::three_user;
  c.apply("stage", "pre_david");
  c.shots = 50000;
  const auto r = cli::montecarlo(c);
  EXPECT_EQ(r["labels"], (std::vector<std::string>{"A", "B", "C2", "D0"}));
  EXPECT_EQ(r["stage"], "pre_david");
  EXPECT_TRUE(r["flagged"].empty());
}

TEST(BatchCsv, Header) {
  ShotBatch b{2, 0, {"A", "B"}, Matrix::Zero(2, 4)};
  b.quads(1, 3) = 0.25;
  std::ostringstream os;
  io::write_batch_csv(os, b);
  EXPECT_EQ(os.str(), "x_A,p_A,x_B,p_B\n0,0,0,0\n0,0,0,0.25\n");
}
