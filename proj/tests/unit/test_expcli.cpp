#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "mgno/diffcore/tensor.hpp"
#include "mgno/expcli/commands.hpp"
#include "mgno/expcli/container.hpp"
#include "mgno/expcli/csv.hpp"
#include "mgno/expcli/report.hpp"
#include "mgno/expcli/run_config.hpp"
#include "mgno/expcli/selftest.hpp"
#include "mgno/pdegen/dataset.hpp"

using namespace mgno;
using namespace mgno::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("mgno_test_expcli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "mgno");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return run(int(argv.size()), argv.data());
}

pde::Dataset small_darcy(std::uint64_t seed = 0) {
  auto meta = pde::default_meta(pde::PdeKind::darcy);
  meta.n_train = 2;
  meta.n_test = 1;
  meta.grid = 16;
  meta.grf.resolution = 16;
  meta.seed = seed;
  return pde::generate_dataset(meta);
}

train::MetricsRow sample_row(const std::string& method, double train, double test) {
  train::MetricsRow r;
  r.method = method;
  r.kind = method.find("MGNO") != std::string::npos ? ops::ModelKind::mgno : ops::ModelKind::gno;
  r.scales = r.kind == ops::ModelKind::mgno ? 4 : 1;
  r.depth = 4;
  r.train_error = train;
  r.test_error = test;
  r.train_std = 0.0012;
  r.test_std = 0.0031;
  r.seconds_per_epoch = 1.25;
  r.n_params = 12345;
  r.n_seeds = 4;
  return r;
}

}  // namespace

TEST_CASE("containers round-trip exactly") {
  const auto dir = scratch("roundtrip");
  const auto data = small_darcy();
  write_container(dir, data);
  CHECK(fs::exists(dir / "meta.json"));
  CHECK(fs::file_size(dir / "a.f64") == 3 * 16 * 16 * 8);
  const auto back = read_container(dir);
  CHECK(back.meta.pde == data.meta.pde);
  CHECK(back.meta.n_train == 2);
  CHECK(back.meta.grf.alpha == data.meta.grf.alpha);
  CHECK(back.meta.a_hi == data.meta.a_hi);
  REQUIRE(back.fields.size() == data.fields.size());
  for (const auto& [name, f] : data.fields) {
    CHECK(back.field(name).shape == f.shape);
    CHECK(back.field(name).data == f.data);
  }
  CHECK(meta_json(back) == meta_json(data));
}

TEST_CASE("containers reject unknown versions, bad lengths, and missing fields") {
  const auto dir = scratch("reject");
  write_container(dir, small_darcy());
  const std::string meta = slurp(dir / "meta.json");
  SUBCASE("version") {
    auto bumped = meta;
    const auto pos = bumped.find("\"format_version\": 1");
    REQUIRE(pos != std::string::npos);
    bumped.replace(pos, 19, "\"format_version\": 99");
    std::ofstream(dir / "meta.json", std::ios::trunc) << bumped;
    CHECK_THROWS_WITH_AS(read_container(dir), doctest::Contains("version"), ContainerError);
  }
  SUBCASE("truncated field") {
    fs::resize_file(dir / "u.f64", fs::file_size(dir / "u.f64") - 8);
    CHECK_THROWS_WITH_AS(read_container(dir), doctest::Contains("u"), ContainerError);
  }
  SUBCASE("missing field file") {
    fs::remove(dir / "grad_a.f64");
    CHECK_THROWS_AS(read_container(dir), ContainerError);
  }
  SUBCASE("missing directory") {
    CHECK_THROWS_AS(read_container(dir / "nope"), ContainerError);
  }
}

TEST_CASE("run configs parse known keys and reject the rest") {
  const auto rc = parse_run_config(
      "# comment\n"
      "data = /tmp/d\n"
      "model = mgno   # trailing\n"
      "cycle = w\n"
      "scales = 3\n"
      "intra_share = off\n"
      "skip = 0\n"
      "lr = 5e-4\n"
      "epochs = 7\n"
      "init = kaiming\n"
      "seed = 11\n");
  CHECK(rc.data == "/tmp/d");
  CHECK(rc.model.kind == ops::ModelKind::mgno);
  CHECK(rc.model.cycle == ops::CycleKind::w);
  CHECK(rc.model.scales == 3);
  CHECK_FALSE(rc.model.intra_cycle_sharing);
  CHECK_FALSE(rc.model.skip_connections);
  CHECK(rc.train.lr == 5e-4);
  CHECK(rc.train.epochs == 7);
  CHECK(rc.train.init == ops::InitKind::kaiming);
  CHECK(rc.train.seed == 11);
  CHECK(parse_run_config(format_run_config(rc)).model.cycle == ops::CycleKind::w);
  CHECK(format_run_config(parse_run_config(format_run_config(rc))) == format_run_config(rc));

  CHECK_THROWS_WITH_AS(parse_run_config("widht = 3\n"), doctest::Contains("widht"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("epochs = -1\n"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("epochs = 3x\n"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("cycle = z\n"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("skip = maybe\n"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("lr = 1\nlr = 2\n"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("just words\n"), ConfigError);
}

TEST_CASE("grid specs expand cells as a cartesian product") {
  const auto g = parse_grid_spec(
      "set epochs=5 lr=2e-3 width=8 depth=3\n"
      "cell model=mlp\n"
      "cell model=mgno cycle=v,f,w scales=2,3\n"
      "cell model=mgno cycle=v scales=3 skip=0\n");
  CHECK(g.train.epochs == 5);
  CHECK(g.train.lr == 2e-3);
  REQUIRE(g.cells.size() == 8);
  CHECK(g.cells[0].kind == ops::ModelKind::mlp);
  CHECK(g.cells[0].scales == 1);
  CHECK(g.cells[1].cycle == ops::CycleKind::v);
  CHECK(g.cells[1].scales == 2);
  CHECK(g.cells[2].scales == 3);
  CHECK(g.cells[6].cycle == ops::CycleKind::w);
  for (const auto& c : g.cells) {
    CHECK(c.width == 8);
    CHECK(c.depth == 3);
  }
  CHECK_FALSE(g.cells[7].skip_connections);
  CHECK_THROWS_AS(parse_grid_spec("set seed=3\ncell model=mlp\n"), ConfigError);
  CHECK_THROWS_AS(parse_grid_spec("cell model=mlp lr=1\n"), ConfigError);
  CHECK_THROWS_AS(parse_grid_spec("set epochs=5\n"), ConfigError);
  CHECK_THROWS_AS(parse_grid_spec("run model=mlp\n"), ConfigError);
}

TEST_CASE("csv quoting round-trips") {
  for (const std::string s : {"plain", "a,b", "say \"hi\"", "", "x\"", "line\nbreak"}) {
    const auto line = quote_csv(s) + "," + quote_csv("tail");
    const auto f = split_csv(line);
    REQUIRE(f.size() == 2);
    CHECK(f[0] == s);
    CHECK(f[1] == "tail");
  }
  CHECK_THROWS(split_csv("\"open"));
}

TEST_CASE("csv rows round-trip and upsert by key") {
  const auto dir = scratch("csv");
  const auto path = dir / "results.csv";
  auto a = sample_row("V-MGNO", 0.01234567890123456789, 0.0456);
  a.failure = "seed 2: diverged, at \"epoch 3\"";
  const auto line = csv_line(a, "k1");
  const auto rec = parse_csv_line(line);
  CHECK(rec.key == "k1");
  CHECK(rec.row.train_error == a.train_error);
  CHECK(rec.row.test_error == a.test_error);
  CHECK(rec.row.failure == a.failure);
  CHECK(rec.row.train_std == a.train_std);
  CHECK(csv_line(rec.row, rec.key) == line);

  upsert_csv(path, a, "k1");
  upsert_csv(path, sample_row("GNO", 0.1, 0.2), "k2");
  const auto once = slurp(path);
  upsert_csv(path, a, "k1");
  CHECK(slurp(path) == once);
  auto changed = a;
  changed.train_error = 0.5;
  upsert_csv(path, changed, "k1");
  const auto recs = read_csv(path);
  REQUIRE(recs.size() == 2);
  CHECK(recs[0].key == "k1");
  CHECK(recs[0].row.train_error == 0.5);
  CHECK(recs[1].row.method == "GNO");
  CHECK(once.rfind(csv_header() + "\n", 0) == 0);
  CHECK(csv_columns()[0] == "method");
  CHECK(csv_columns()[6] == "sec_per_epoch");
  CHECK(csv_columns()[7] == "n_params");
}

TEST_CASE("table numbers are in units of 1e-2 with two decimals") {
  CHECK(format_e2(0.05676) == "5.68");
  CHECK(format_e2(0.0) == "0.00");
  CHECK(format_e2(1.0) == "100.00");
  CHECK(format_e2(0.00004) == "0.00");
}

TEST_CASE("md and csv tables carry the same numbers") {
  std::vector<train::MetricsRow> rows;
  const char* methods[] = {"MLP", "GCN", "GNO", "V-MGNO", "F-MGNO", "W-MGNO"};
  for (int i = 0; i < 6; ++i) rows.push_back(sample_row(methods[i], 0.01 * (i + 1), 0.02 * (i + 1)));
  const auto md = render_table(rows, TableFormat::md);
  const auto csv = render_table(rows, TableFormat::csv);
  std::istringstream mds(md), csvs(csv);
  std::string l;
  std::vector<std::string> md_lines, csv_lines;
  while (std::getline(mds, l)) md_lines.push_back(l);
  while (std::getline(csvs, l)) csv_lines.push_back(l);
  REQUIRE(md_lines.size() == 8);
  REQUIRE(csv_lines.size() == 7);
  for (int i = 0; i < 6; ++i) {
    const auto f = split_csv(csv_lines[i + 1]);
    CHECK(f[0] == methods[i]);
    const auto& m = md_lines[i + 2];
    CHECK(m.find("| " + std::string(methods[i]) + " |") == 0);
    CHECK(m.find(f[5] + " ± " + f[6]) != std::string::npos);
    CHECK(m.find(f[7] + " ± " + f[8]) != std::string::npos);
  }
  CHECK(md_lines[5].find("3.00 ± 0.12") == std::string::npos);
  CHECK(md_lines[5].find("| 4.00 ± 0.12 | 8.00 ± 0.31 |") != std::string::npos);
  CHECK(split_csv(csv_lines[1])[2] == "-");
  CHECK(split_csv(csv_lines[4])[2] == "yes");
  CHECK(parse_table_format("csv") == TableFormat::csv);
  CHECK_THROWS(parse_table_format("html"));
}

TEST_CASE("dataset tags identify the container") {
  auto m = pde::default_meta(pde::PdeKind::burgers);
  m.n_train = 3;
  m.n_test = 4;
  m.grid = 128;
  m.seed = 9;
  CHECK(dataset_tag(m) == "burgers/3+4/grid128/seed9");
}

TEST_CASE("command line: generation is deterministic and validated") {
  const auto dir = scratch("gen");
  const std::vector<std::string> args = {"gen", "--pde", "darcy", "--n-train", "1", "--n-test", "1",
                                         "--grid", "16", "--seed", "5", "--out"};
  auto a = args, b = args;
  a.push_back((dir / "a").string());
  b.push_back((dir / "b").string());
  REQUIRE(run_cli(a) == kExitOk);
  REQUIRE(run_cli(b) == kExitOk);
  for (const auto& e : fs::directory_iterator(dir / "a")) {
    CHECK(slurp(e.path()) == slurp(dir / "b" / e.path().filename()));
  }
  CHECK(read_container(dir / "a").meta.seed == 5);
  CHECK(run_cli({"gen", "--pde", "heat", "--out", (dir / "c").string()}) == kExitValidation);
  CHECK(run_cli({"gen", "--grid", "0", "--out", (dir / "c").string()}) == kExitValidation);
  CHECK(run_cli({"gen"}) == kExitValidation);
  CHECK(run_cli({"frobnicate"}) == kExitValidation);
}

TEST_CASE("command line: train, ablate, and report") {
  const auto dir = scratch("train");
  write_container(dir / "data", small_darcy(1));
  const auto data = (dir / "data").string(), out = (dir / "r.csv").string();
  const std::vector<std::string> base = {"train", "--data", data, "--width", "4", "--kwidth", "4",
                                         "--epochs", "2", "--out", out};
  auto gno = base;
  gno.insert(gno.end(), {"--model", "gno", "--scales", "1"});
  REQUIRE(run_cli(gno) == kExitOk);
  const auto first = read_csv(out);
  REQUIRE(first.size() == 1);
  CHECK(first[0].row.method == "GNO");
  CHECK(first[0].key.find(";data=darcy/2+1/grid16/seed1") != std::string::npos);
  REQUIRE(run_cli(gno) == kExitOk);
  const auto again = read_csv(out);
  REQUIRE(again.size() == 1);
  CHECK(again[0].row.train_error == first[0].row.train_error);
  CHECK(again[0].row.test_error == first[0].row.test_error);

  auto mg = base;
  mg.insert(mg.end(), {"--model", "mgno", "--scales", "2", "--no-skip"});
  REQUIRE(run_cli(mg) == kExitOk);
  const auto two = read_csv(out);
  REQUIRE(two.size() == 2);
  CHECK_FALSE(two[1].row.skip_connections);

  auto bad = base;
  bad.insert(bad.end(), {"--model", "gno", "--scales", "3"});
  CHECK(run_cli(bad) == kExitValidation);
  std::vector<std::string> zero = {"train", "--data", data, "--model", "mlp", "--epochs", "0",
                                   "--out", out};
  CHECK(run_cli(zero) == kExitValidation);
  CHECK(run_cli({"train", "--data", (dir / "missing").string()}) == kExitValidation);
  std::ofstream(dir / "run.cfg") << "model = gcn\nscales = 1\nwidht = 3\n";
  CHECK(run_cli({"train", "--config", (dir / "run.cfg").string(), "--data", data}) == kExitValidation);
  CHECK(read_csv(out).size() == 2);

  std::ofstream(dir / "grid.txt") << "set epochs=1 width=4 kwidth=4 depth=2 mlp_width=8\n"
                                     "cell model=mlp\n"
                                     "cell model=mgno cycle=v scales=2\n";
  const auto ab = (dir / "ab").string();
  REQUIRE(run_cli({"ablate", "--data", data, "--grid-spec", (dir / "grid.txt").string(), "--seeds",
               "2", "--out", ab}) == kExitOk);
  CHECK(read_csv(fs::path(ab) / "runs.csv").size() == 4);
  const auto summary = read_csv(fs::path(ab) / "summary.csv");
  REQUIRE(summary.size() == 2);
  CHECK(summary[0].row.n_seeds == 2);
  const auto md = (dir / "t.md").string();
  REQUIRE(run_cli({"report", "--in", ab, "--out", md}) == kExitOk);
  CHECK(slurp(md) == render_table({summary[0].row, summary[1].row}, TableFormat::md));
  CHECK(run_cli({"report", "--in", ab, "--format", "xml"}) == kExitValidation);
  CHECK(run_cli({"report", "--in", (dir / "nothing").string()}) == kExitValidation);

  std::ofstream(dir / "badgrid.txt") << "set epochs=1 width=4 kwidth=4\n"
                                        "cell model=gno scales=2\n";
  CHECK(run_cli({"ablate", "--data", data, "--grid-spec", (dir / "badgrid.txt").string(), "--seeds",
             "1", "--out", (dir / "ab2").string()}) == kExitRuntime);
  const auto failed = read_csv(dir / "ab2" / "summary.csv");
  REQUIRE(failed.size() == 1);
  CHECK(failed[0].row.failure != "");
}

TEST_CASE("command line: self checks and gradient fault detection") {
  CHECK(run_cli({"gradcheck"}) == kExitOk);
  CHECK(run_cli({"gradcheck", "--inject-fault", "relu"}) == kExitRuntime);
  CHECK(run_cli({"gradcheck"}) == kExitOk);
  const auto checks = primitive_gradchecks();
  CHECK(checks.size() >= 18);
  CHECK(all_pass(checks));
  diff::testing::inject_backward_fault("relu");
  const auto faulty = primitive_gradchecks();
  diff::testing::clear_backward_faults();
  std::vector<std::string> failed;
  for (const auto& c : faulty) {
    if (!c.pass) failed.push_back(c.name);
  }
  CHECK(failed == std::vector<std::string>{"gradcheck affine_relu", "gradcheck relu"});
  const auto text = format_checks(faulty);
  CHECK(text.find("[FAIL] diffcore   gradcheck relu") != std::string::npos);
}

TEST_CASE("solver and schedule self checks pass") {
  CHECK(schedule_check().pass);
  CHECK(orthogonality_check().pass);
  CHECK(burgers_heat_check().pass);
  CHECK(burgers_invariants_check(10).pass);
  const auto order = darcy_order_check();
  CHECK_MESSAGE(order.pass, order.detail);
}
