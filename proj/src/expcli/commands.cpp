#include "mgno/expcli/commands.hpp"

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>

#include "CLI11.hpp"
#include "mgno/diffcore/tensor.hpp"
#include "mgno/expcli/container.hpp"
#include "mgno/expcli/csv.hpp"
#include "mgno/expcli/report.hpp"
#include "mgno/expcli/run_config.hpp"
#include "mgno/expcli/selftest.hpp"
#include "mgno/training/ablation.hpp"
#include "mgno/training/problem.hpp"
#include "mgno/training/train.hpp"

namespace mgno::cli {

namespace fs = std::filesystem;

namespace {

/// A failure that should exit with the validation code.
struct ValidationFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string g6(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

/// Input and edge feature counts implied by the PDE, known before any data is read.
ops::ModelConfig with_dimensions(ops::ModelConfig m, pde::PdeKind pde) {
  const std::size_t dim = pde == pde::PdeKind::darcy ? 2 : 1;
  const std::size_t f_raw = pde == pde::PdeKind::darcy ? 3 : 1;
  m.input_features = f_raw + dim;
  m.edge_features = 2 * dim + 2 * f_raw;
  return m;
}

pde::Dataset load_data(const std::string& path) {
  if (path.empty()) throw ValidationFailure("no dataset given (--data)");
  try {
    return read_container(path);
  } catch (const ContainerError& e) {
    throw ValidationFailure(e.what());
  } catch (const std::invalid_argument& e) {
    throw ValidationFailure(std::string("container meta: ") + e.what());
  }
}

void print_meta(const pde::DatasetMeta& m, std::ostream& os) {
  os << "pde " << pde::to_string(m.pde) << ", " << m.n_train << " train + " << m.n_test
     << " test, grid " << m.grid << ", seed " << m.seed << ", GRF(alpha " << g6(m.grf.alpha)
     << ", tau " << g6(m.grf.tau) << ", sigma " << g6(m.grf.sigma) << ")";
  if (m.pde == pde::PdeKind::darcy) {
    os << ", a in {" << g6(m.a_lo) << ", " << g6(m.a_hi) << "}, f " << g6(m.forcing);
  } else {
    os << ", nu " << g6(m.nu) << ", t " << g6(m.t_end);
  }
  os << "\n";
}

int cmd_gen(const std::string& pde_name, std::optional<std::size_t> n_train,
            std::optional<std::size_t> n_test, std::optional<std::size_t> grid,
            std::uint64_t seed, const std::string& out) {
  pde::DatasetMeta meta;
  try {
    meta = pde::default_meta(pde::parse_pde_kind(pde_name));
    if (n_train) meta.n_train = *n_train;
    if (n_test) meta.n_test = *n_test;
    if (grid) {
      meta.grid = *grid;
      meta.grf.resolution = *grid;
    }
    meta.seed = seed;
    pde::validate(meta);
  } catch (const std::invalid_argument& e) {
    throw ValidationFailure(e.what());
  }
  const auto data = pde::generate_dataset(meta);
  write_container(out, data);
  std::cout << "wrote " << out << ": ";
  print_meta(meta, std::cout);
  return kExitOk;
}

int cmd_train(RunConfig rc) {
  const auto data = load_data(rc.data);
  ops::ModelConfig model;
  try {
    train::validate(rc.train);
    model = with_dimensions(rc.model, data.meta.pde);
    ops::validate(model);
  } catch (const std::invalid_argument& e) {
    throw ValidationFailure(e.what());
  }
  const auto problem = train::prepare_problem(data, model.scales, rc.train.seed);
  const auto res = train::train_model(model, problem, rc.train);
  const auto key = train::config_key(model, rc.train) + ";data=" + dataset_tag(data.meta);
  upsert_csv(rc.out, res.row, key);
  std::cout << res.row.method << " scales " << res.row.scales << " seed " << rc.train.seed
            << ": train " << format_e2(res.row.train_error) << "e-2, test "
            << format_e2(res.row.test_error) << "e-2, " << g6(res.row.seconds_per_epoch)
            << " s/epoch, " << res.row.n_params << " params -> " << rc.out << "\n";
  return kExitOk;
}

int cmd_ablate(const std::string& data_path, const std::string& grid_path, std::size_t n_seeds,
               const std::string& out_dir, std::size_t workers) {
  GridSpec spec;
  try {
    spec = load_grid_spec(grid_path);
  } catch (const ConfigError& e) {
    throw ValidationFailure(e.what());
  }
  if (n_seeds == 0) throw ValidationFailure("--seeds must be >= 1");
  const auto data = load_data(data_path);
  for (auto& c : spec.cells) {
    c = with_dimensions(c, data.meta.pde);
    try {
      ops::validate(c);
    } catch (const std::invalid_argument& e) {
      // Invalid cells are reported per row by the grid runner.
      std::cerr << "warning: " << ops::method_name(c) << ": " << e.what() << "\n";
    }
  }
  try {
    train::validate(spec.train);
  } catch (const std::invalid_argument& e) {
    throw ValidationFailure(e.what());
  }
  fs::create_directories(out_dir);
  const fs::path runs = fs::path(out_dir) / "runs.csv";
  const std::string tag = dataset_tag(data.meta);

  train::GridOptions opts;
  opts.workers = workers;
  opts.seeds.clear();
  for (std::size_t s = 0; s < n_seeds; ++s) opts.seeds.push_back(s);
  opts.on_run = [&](const ops::ModelConfig& cell, const train::MetricsRow& row,
                    std::uint64_t seed) {
    auto tc = spec.train;
    tc.seed = seed;
    upsert_csv(runs, row, train::config_key(cell, tc) + ";data=" + tag);
    std::cout << "  " << row.method << " scales " << row.scales << " seed " << seed << ": train "
              << format_e2(row.train_error) << "e-2, test " << format_e2(row.test_error) << "e-2\n"
              << std::flush;
  };
  train::ProblemCache problems(data, std::max<std::size_t>(2, workers ? workers : train::workers_from_env()));
  const auto rows = train::run_ablation_grid(spec.cells, problems, spec.train, opts);

  std::vector<CsvRecord> summary;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    summary.push_back({rows[i], "row=" + std::to_string(i) + ";seeds=" + std::to_string(n_seeds) +
                                    ";data=" + tag});
  }
  write_csv(fs::path(out_dir) / "summary.csv", summary);
  std::cout << render_table(rows, TableFormat::md);
  bool any_failed = false;
  for (const auto& r : rows) any_failed |= !r.ok();
  return any_failed ? kExitRuntime : kExitOk;
}

int cmd_report(const std::string& in_dir, const std::string& format, const std::string& out) {
  TableFormat f;
  try {
    f = parse_table_format(format);
  } catch (const std::invalid_argument& e) {
    throw ValidationFailure(e.what());
  }
  const fs::path path = fs::path(in_dir) / "summary.csv";
  if (!fs::exists(path)) throw ValidationFailure("no summary.csv in " + in_dir);
  std::vector<train::MetricsRow> rows;
  for (auto& r : read_csv(path)) rows.push_back(std::move(r.row));
  const auto text = render_table(rows, f);
  if (out.empty()) {
    std::cout << text;
  } else {
    std::ofstream os(out, std::ios::trunc);
    os << text;
    if (!os) throw std::runtime_error("cannot write " + out);
  }
  return kExitOk;
}

int cmd_checks(const std::vector<CheckResult>& checks) {
  std::cout << format_checks(checks);
  return all_pass(checks) ? kExitOk : kExitRuntime;
}

}  // namespace

std::string dataset_tag(const pde::DatasetMeta& m) {
  return std::string(pde::to_string(m.pde)) + "/" + std::to_string(m.n_train) + "+" +
         std::to_string(m.n_test) + "/grid" + std::to_string(m.grid) + "/seed" +
         std::to_string(m.seed);
}

int run(int argc, char** argv) {
  CLI::App app{"Multi-scale graph neural operator laboratory"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "Generate a Darcy or Burgers dataset container");
  std::string gen_pde = "darcy", gen_out;
  std::optional<std::size_t> gen_train, gen_test, gen_grid;
  std::uint64_t gen_seed = 0;
  gen->add_option("--pde", gen_pde, "darcy or burgers")->check(CLI::IsMember({"darcy", "burgers"}));
  gen->add_option("--n-train", gen_train, "Train samples (default 100)");
  gen->add_option("--n-test", gen_test, "Test samples (default 100)");
  gen->add_option("--grid", gen_grid, "Grid size (Darcy nodes per side, Burgers points)");
  gen->add_option("--seed", gen_seed, "Dataset seed");
  gen->add_option("--out", gen_out, "Output directory")->required();

  // train
  auto* tr = app.add_subcommand("train", "Train one model and append its metrics row");
  std::string tr_config;
  tr->add_option("--config", tr_config, "Run config file (key = value lines)");
  // Flags map onto run-config keys; given flags override the config file.
  const std::vector<std::pair<std::string, std::string>> flag_keys = {
      {"--data", "data"},         {"--model", "model"},       {"--cycle", "cycle"},
      {"--scales", "scales"},     {"--depth", "depth"},       {"--intra-share", "intra_share"},
      {"--iter-share", "iter_share"}, {"--width", "width"},   {"--kwidth", "kwidth"},
      {"--lr", "lr"},             {"--epochs", "epochs"},     {"--init", "init"},
      {"--gain", "gain"},         {"--seed", "seed"},         {"--out", "out"},
      {"--batch", "batch"},       {"--eval-every", "eval_every"}};
  std::map<std::string, std::string> flag_values;
  std::vector<std::pair<CLI::Option*, std::string>> flag_opts;
  for (const auto& [flag, key] : flag_keys) {
    flag_opts.push_back({tr->add_option(flag, flag_values[key], "Sets '" + key + "'"), key});
  }
  bool no_skip = false;
  tr->add_flag("--no-skip", no_skip, "Disable skip connections");

  // ablate
  auto* ab = app.add_subcommand("ablate", "Run an ablation grid over seeds 0..N-1");
  std::string ab_data, ab_grid, ab_out;
  std::size_t ab_seeds = 4, ab_workers = 0;
  ab->add_option("--data", ab_data, "Dataset container")->required();
  ab->add_option("--grid-spec", ab_grid, "Grid spec file")->required();
  ab->add_option("--seeds", ab_seeds, "Number of seeds");
  ab->add_option("--out", ab_out, "Output directory")->required();
  ab->add_option("--workers", ab_workers, "Concurrent cells (default MGNO_WORKERS or 1)");

  // report
  auto* rep = app.add_subcommand("report", "Render an ablation summary as a table");
  std::string rep_in, rep_format = "md", rep_out;
  rep->add_option("--in", rep_in, "Ablation output directory")->required();
  rep->add_option("--format", rep_format, "md or csv");
  rep->add_option("--out", rep_out, "Write to a file instead of stdout");

  auto* self = app.add_subcommand("selftest", "Solver oracles, schedules, init, and gradchecks");

  auto* gc = app.add_subcommand("gradcheck", "Primitive and full-model gradient checks");
  std::string fault;
  gc->add_option("--inject-fault", fault, "Corrupt the backward rule of this op first");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    if (*gen) return cmd_gen(gen_pde, gen_train, gen_test, gen_grid, gen_seed, gen_out);
    if (*tr) {
      RunConfig rc;
      try {
        if (!tr_config.empty()) rc = load_run_config(tr_config);
        for (const auto& [opt, key] : flag_opts) {
          if (opt->count()) set_run_key(rc, key, flag_values[key]);
        }
        if (no_skip) rc.model.skip_connections = false;
      } catch (const ConfigError& e) {
        throw ValidationFailure(e.what());
      }
      return cmd_train(rc);
    }
    if (*ab) return cmd_ablate(ab_data, ab_grid, ab_seeds, ab_out, ab_workers);
    if (*rep) return cmd_report(rep_in, rep_format, rep_out);
    if (*self) return cmd_checks(run_selftest());
    if (*gc) {
      if (!fault.empty()) diff::testing::inject_backward_fault(fault);
      auto checks = primitive_gradchecks();
      for (auto& c : model_gradchecks()) checks.push_back(std::move(c));
      diff::testing::clear_backward_faults();
      return cmd_checks(checks);
    }
  } catch (const ValidationFailure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace mgno::cli
