// gaussnet: scans, certification, optimal displacement table and
// Monte-Carlo validation of the Gaussian distribution network.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "gaussnet/cli.hpp"

namespace {

using namespace gaussnet;

struct Flags {
  std::string config;
  std::optional<std::string> scenario;
  std::optional<std::string> eta_grid;
  std::vector<std::string> sets;
  std::optional<std::string> out;
  std::optional<std::string> format;
  std::optional<std::string> seed;
  std::optional<std::string> shots;
  std::optional<std::string> threads;
  std::optional<std::string> stage;
  std::vector<std::string> splits;
  std::string batch_out;
  std::string input;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "flat key=value config file (flags win)");
  cmd->add_option("--set", f.sets, "override a parameter, key=value (repeatable)");
  cmd->add_option("--out", f.out, "write output to this path instead of stdout");
  cmd->add_option("--format", f.format, "csv or json");
}

void add_network(CLI::App* cmd, Flags& f) {
  cmd->add_option("--scenario", f.scenario, "two_user, three_user, qss or appendix_e");
  cmd->add_option("--eta-grid", f.eta_grid, "channel efficiencies start:stop:steps");
}

cli::RunConfig build_config(const Flags& f) {
  cli::RunConfig c;
  if (!f.config.empty()) cli::load_config_file(f.config, c);
  auto apply = [&](const char* key, const std::optional<std::string>& v) {
    if (v) c.apply(key, *v);
  };
  apply("scenario", f.scenario);
  apply("eta_grid", f.eta_grid);
  apply("out", f.out);
  apply("format", f.format);
  apply("seed", f.seed);
  apply("shots", f.shots);
  apply("threads", f.threads);
  apply("stage", f.stage);
  for (const auto& s : f.sets) c.apply_assignment(s);
  for (const auto& s : f.splits) c.apply("split", s);
  c.validate();
  return c;
}

template <class Writer>
void emit(const std::string& path, Writer&& write) {
  if (path.empty()) {
    write(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InvalidArgument("cannot open output '" + path + "'");
  write(os);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gaussian multi-user network: separability and steering analysis"};
  app.require_subcommand(1);
  Flags f;

  auto* scan = app.add_subcommand("scan", "scan a scenario over channel efficiency");
  add_common(scan, f);
  add_network(scan, f);

  auto* certify = app.add_subcommand("certify", "certify a covariance matrix file");
  certify->add_option("file", f.input, "covariance matrix file")->required();
  certify->add_option("--split", f.splits, "split spec such as A|B0,C1 (repeatable; default all 1-vs-rest)");
  certify->add_option("--out", f.out, "write output to this path instead of stdout");

  auto* table = app.add_subcommand("table-a1", "optimal displacement coefficients versus loss");
  add_common(table, f);

  auto* mc = app.add_subcommand("montecarlo", "shot-level simulation against the analytic covariance");
  add_common(mc, f);
  add_network(mc, f);
  mc->add_option("--seed", f.seed, "generator seed");
  mc->add_option("--shots", f.shots, "number of shots");
  mc->add_option("--threads", f.threads, "worker threads (results do not depend on it)");
  mc->add_option("--stage", f.stage, "pre_bob, final_two_user, pre_david or final_three_user");
  mc->add_option("--batch-out", f.batch_out, "also write the raw shots as CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cli::kOk : cli::kUsageError;
  }

  try {
    if (*certify) {
      const auto report = cli::certify_file(f.input, f.splits);
      if (!report["physical"].get<bool>()) {
        std::cerr << "warning: matrix violates the uncertainty relation (min symplectic eigenvalue "
                  << report["min_symplectic_eigenvalue"].dump() << "); criteria evaluated anyway\n";
      }
      emit(f.out.value_or(""), [&](std::ostream& os) { os << report.dump(2) << '\n'; });
      return cli::kOk;
    }
    const cli::RunConfig config = build_config(f);
    if (*scan) {
      const auto t = cli::run_scan(config);
      emit(config.out, [&](std::ostream& os) { cli::write_table(os, t, config.format); });
    } else if (*table) {
      const auto format = f.format || !f.config.empty() ? config.format : cli::OutputFormat::text;
      emit(config.out, [&](std::ostream& os) { cli::write_table_a1(os, cli::table_a1(), format); });
    } else if (*mc) {
      const auto report = cli::montecarlo(config);
      emit(config.out, [&](std::ostream& os) { os << report.dump(2) << '\n'; });
      if (!f.batch_out.empty()) {
        const auto p = cli::scenario_params(config, config.grid.start).params;
        const auto stage = config.has_stage ? config.stage : cli::default_stage(config.scenario);
        const auto batch = simulate_shots(p, stage, config.shots, config.seed, config.threads);
        emit(f.batch_out, [&](std::ostream& os) { io::write_batch_csv(os, batch); });
      }
    }
    return cli::kOk;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::kInputError;
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::kNumericalError;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::kNumericalError;
  }
}
