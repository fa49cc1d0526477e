#include "mgno/expcli/selftest.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>

#include "mgno/diffcore/gradcheck.hpp"
#include "mgno/diffcore/ops.hpp"
#include "mgno/meshgraph/graph.hpp"
#include "mgno/operators/models.hpp"
#include "mgno/operators/params.hpp"
#include "mgno/operators/schedule.hpp"
#include "mgno/pdegen/burgers.hpp"
#include "mgno/pdegen/darcy.hpp"
#include "mgno/pdegen/grf.hpp"

namespace mgno::cli {

namespace {

using diff::Index;
using diff::Tensor;
constexpr double kPi = std::numbers::pi;

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

CheckResult timed(std::string module, std::string name,
                  const std::function<std::pair<bool, std::string>()>& body) {
  CheckResult r{std::move(module), std::move(name), false, "", 0.0};
  const auto t0 = std::chrono::steady_clock::now();
  try {
    std::tie(r.pass, r.detail) = body();
  } catch (const std::exception& e) {
    r.pass = false;
    r.detail = std::string("exception: ") + e.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

Tensor uniform_tensor(diff::Shape shape, diff::SeededRng& rng, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(diff::shape_numel(shape));
  for (auto& x : v) x = lo + (hi - lo) * rng.uniform();
  return Tensor(std::move(shape), std::move(v));
}

/// Values bounded away from zero so relu kinks are never straddled by the stencil.
Tensor off_kink_tensor(diff::Shape shape, diff::SeededRng& rng) {
  std::vector<double> v(diff::shape_numel(shape));
  for (auto& x : v) x = (rng.uniform() < 0.5 ? -1.0 : 1.0) * (0.1 + rng.uniform());
  return Tensor(std::move(shape), std::move(v));
}

std::pair<bool, std::string> verdict(const diff::GradcheckReport& r) {
  std::string d = "worst " + fmt("%.2e", r.worst());
  if (!r.pass()) {
    std::string names = r.failures();
    if (names.size() > 120) names = names.substr(0, names.rfind(", ", 120)) + ", ...";
    d += ", failing: " + names;
  }
  return {r.pass(), d};
}

double manufactured_error(std::size_t s) {
  const double h = 1.0 / double(s - 1);
  std::vector<double> a(s * s, 1.0), f(s * s), exact(s * s);
  for (std::size_t i = 0; i < s; ++i) {
    for (std::size_t j = 0; j < s; ++j) {
      const double v = std::sin(kPi * double(i) * h) * std::sin(kPi * double(j) * h);
      exact[i * s + j] = v;
      f[i * s + j] = 2 * kPi * kPi * v;
    }
  }
  const auto u = pde::darcy_solve(a, f, s).u;
  double err = 0.0;
  for (std::size_t i = 0; i < s * s; ++i) err = std::max(err, std::abs(u[i] - exact[i]));
  return err;
}

double norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / double(v.size());
}

}  // namespace

std::vector<CheckResult> primitive_gradchecks(double tol) {
  std::vector<CheckResult> out;
  auto add = [&](const std::string& op, const std::function<diff::GradcheckReport()>& run) {
    out.push_back(timed("diffcore", "gradcheck " + op, [&] { return verdict(run()); }));
  };
  diff::SeededRng rng(17);
  const auto a = uniform_tensor({4, 3}, rng), b = uniform_tensor({3, 5}, rng);
  const auto c = uniform_tensor({4, 3}, rng), bias3 = uniform_tensor({3}, rng);
  const auto bias5 = uniform_tensor({5}, rng);
  const auto r = off_kink_tensor({4, 5}, rng);
  // Added after relu so the upstream gradient is nonzero where the input is negative.
  const auto offset = Tensor::full({4, 5}, 0.5);
  const double eps = 1e-5;

  add("matmul", [&] { return diff::gradcheck([&] { return diff::sum_squares(diff::matmul(a, b)); }, {{"a", a}, {"b", b}}, eps, tol); });
  add("affine", [&] {
    return diff::gradcheck([&] { return diff::sum_squares(diff::affine(a, b, bias5)); },
                           {{"x", a}, {"w", b}, {"bias", bias5}}, eps, tol);
  });
  // Odd columns shifted fully positive, even columns fully negative, so no pre-activation
  // of x·w + bias sits near the kink.
  {
    const auto pre = diff::matmul(a, b);
    std::vector<double> shift(5);
    for (std::size_t j = 0; j < 5; ++j) {
      double lo = pre.at(0, j);
      for (std::size_t i = 1; i < 4; ++i) lo = std::min(lo, pre.at(i, j));
      shift[j] = j % 2 ? 0.2 - lo : -10.0;
    }
    const Tensor sb({5}, shift);
    add("affine_relu", [&] {
      return diff::gradcheck([&] { return diff::sum_squares(diff::add(diff::affine(a, b, sb, true), offset)); },
                             {{"x", a}, {"w", b}}, eps, tol);
    });
  }
  add("add", [&] { return diff::gradcheck([&] { return diff::sum_squares(diff::add(a, c)); }, {{"a", a}, {"b", c}}, eps, tol); });
  add("sub", [&] { return diff::gradcheck([&] { return diff::sum_squares(diff::sub(a, c)); }, {{"a", a}, {"b", c}}, eps, tol); });
  add("add_bias", [&] {
    return diff::gradcheck([&] { return diff::sum_squares(diff::add_bias(a, bias3)); }, {{"x", a}, {"bias", bias3}}, eps, tol);
  });
  add("scale", [&] { return diff::gradcheck([&] { return diff::sum_squares(diff::scale(a, -2.5)); }, {{"a", a}}, eps, tol); });
  add("relu", [&] {
    return diff::gradcheck([&] { return diff::sum_squares(diff::add(diff::relu(r), offset)); }, {{"x", r}}, eps, tol);
  });
  add("concat_cols", [&] {
    return diff::gradcheck([&] { return diff::sum_squares(diff::concat_cols(a, c)); }, {{"a", a}, {"b", c}}, eps, tol);
  });
  const std::vector<Index> rows = {2, 0, 2, 1, 3};
  add("gather_rows", [&] {
    return diff::gradcheck([&] { return diff::sum_squares(diff::gather_rows(a, rows)); }, {{"t", a}}, eps, tol);
  });
  const std::vector<Index> seg = {0, 2, 0, 1};
  add("segment_mean", [&] {
    return diff::gradcheck([&] { return diff::sum_squares(diff::segment_mean(a, seg, 4)); }, {{"values", a}}, eps, tol);
  });
  const std::vector<Index> map = {11, 0, 5, 5, 7, 3};
  add("gather_elements", [&] {
    return diff::gradcheck([&] { return diff::sum_squares(diff::gather_elements(a, map, {2, 3})); }, {{"t", a}}, eps, tol);
  });
  add("sum", [&] {
    return diff::gradcheck([&] { return diff::sum_squares(diff::sum(a)); }, {{"a", a}}, eps, tol);
  });
  add("sum_squares", [&] { return diff::gradcheck([&] { return diff::sum_squares(a); }, {{"a", a}}, eps, tol); });
  add("sqrt_scalar", [&] {
    return diff::gradcheck([&] { return diff::sqrt_scalar(diff::sum_squares(a)); }, {{"a", a}}, eps, tol);
  });
  diff::CsrMatrix csr;
  csr.rows = 3;
  csr.cols = 4;
  csr.row_ptr = {0, 2, 2, 5};
  csr.col = {0, 3, 1, 2, 3};
  csr.value = {0.5, -1.0, 2.0, 0.25, 0.75};
  add("sparse_matmul", [&] {
    return diff::gradcheck([&] { return diff::sum_squares(diff::sparse_matmul(csr, a)); }, {{"x", a}}, eps, tol);
  });
  const std::size_t k = 3, w = 2, n_src = 4, n_tgt = 3;
  const auto h = uniform_tensor({6, k}, rng), p = uniform_tensor({n_src, k * w}, rng);
  const auto v = uniform_tensor({n_src, w}, rng);
  const std::vector<Index> src = {0, 3, 1, 1, 2, 3}, tgt = {0, 0, 1, 2, 2, 2};
  add("edge_contract", [&] {
    return diff::gradcheck([&] { return diff::sum_squares(diff::edge_contract(h, p, src)); }, {{"h", h}, {"p", p}}, eps, tol);
  });
  add("edge_outer_mean", [&] {
    return diff::gradcheck([&] { return diff::sum_squares(diff::edge_outer_mean(h, v, src, tgt, n_tgt)); },
                           {{"h", h}, {"v", v}}, eps, tol);
  });
  return out;
}

std::vector<CheckResult> model_gradchecks(double tol) {
  std::vector<CheckResult> out;
  graph::GridData grid;
  grid.dim = 2;
  grid.f_raw = 1;
  diff::SeededRng data_rng(5);
  for (std::size_t i = 0; i < 8; ++i) {
    for (std::size_t j = 0; j < 8; ++j) {
      grid.coords.push_back(double(i) / 7.0);
      grid.coords.push_back(double(j) / 7.0);
      grid.values.push_back(data_rng.normal());
    }
  }
  const graph::Domain domain{2, graph::Metric::euclidean, 0.0, 1.0};
  diff::SeededRng g_rng(6), g1_rng(6);
  const auto g2 = graph::build_graph(domain, {{10, 0.4, 0.6}, {4, 0.6, 0.8}}, grid, g_rng);
  const auto g1 = graph::build_graph(domain, {{10, 0.4, 0.4}}, grid, g1_rng);

  for (auto kind : {ops::ModelKind::mgno, ops::ModelKind::gno, ops::ModelKind::gcn, ops::ModelKind::mlp}) {
    ops::ModelConfig cfg;
    cfg.kind = kind;
    cfg.scales = kind == ops::ModelKind::mgno ? 2 : 1;
    cfg.depth = 2;
    cfg.width = 3;
    cfg.kernel_width = 4;
    cfg.iteration_sharing = false;
    cfg.input_features = 3;
    cfg.edge_features = 6;
    cfg.mlp_depth = 3;
    cfg.mlp_width = 5;
    cfg.gcn_depth = 2;
    const auto& g = kind == ops::ModelKind::mgno ? g2 : g1;
    out.push_back(timed("operators", "gradcheck " + ops::method_name(cfg) + " (all parameters)", [&] {
      diff::SeededRng rng(7);
      auto params = ops::init_parameters(cfg, rng, ops::InitKind::orthogonal, 1.0);
      std::vector<diff::NamedTensor> inputs;
      for (const auto& [name, t] : params.items()) {
        Tensor p = t;
        if (name.ends_with("bias")) {
          for (auto& x : p.mutable_data()) x = 0.1 * rng.normal();
        }
        p.set_requires_grad(true);
        inputs.push_back({name, p});
      }
      return verdict(diff::gradcheck(
          [&] { return diff::sum_squares(ops::forward(cfg, params, g)); }, inputs, 1e-6, tol));
    }));
  }
  return out;
}

CheckResult darcy_order_check() {
  return timed("pdegen", "Darcy manufactured solution order (64 -> 128)", [] {
    const double e64 = manufactured_error(64), e128 = manufactured_error(128);
    const double order = std::log(e64 / e128) / std::log(127.0 / 63.0);
    return std::make_pair(std::abs(order - 2.0) <= 0.2, "order " + fmt("%.3f", order));
  });
}

CheckResult burgers_heat_check() {
  return timed("pdegen", "Burgers small-amplitude heat limit", [] {
    const std::size_t n = 256;
    const double eps = 1e-4, nu = 0.1;
    std::vector<double> u0(n), exact(n), diff(n);
    for (std::size_t j = 0; j < n; ++j) {
      const double x = 2 * kPi * double(j) / double(n);
      u0[j] = eps * std::sin(x);
      exact[j] = eps * std::exp(-nu) * std::sin(x);
    }
    const auto u1 = pde::burgers_solve(u0, nu).u;
    for (std::size_t j = 0; j < n; ++j) diff[j] = u1[j] - exact[j];
    const double rel = norm(diff) / norm(exact);
    return std::make_pair(rel <= 1e-3, "relative error " + fmt("%.2e", rel));
  });
}

CheckResult burgers_invariants_check(std::size_t samples) {
  return timed("pdegen", "Burgers mean conservation and energy decay", [samples] {
    const pde::GrfSpec spec{2.0, 5.0, 25.0, 256};
    double worst_mean = 0.0;
    std::size_t energy_violations = 0;
    for (std::size_t i = 0; i < samples; ++i) {
      diff::SeededRng rng(11, i);
      auto u0 = pde::sample_grf_1d_periodic(spec, rng);
      const double offset = 0.5 * (rng.uniform() - 0.5);
      for (auto& v : u0) v += offset;
      const auto u1 = pde::burgers_solve(u0, 0.1).u;
      worst_mean = std::max(worst_mean, std::abs(mean(u1) - mean(u0)));
      energy_violations += norm(u1) > norm(u0);
    }
    return std::make_pair(worst_mean <= 1e-10 && energy_violations == 0,
                          "max mean drift " + fmt("%.1e", worst_mean) + ", energy increases " +
                              std::to_string(energy_violations));
  });
}

CheckResult schedule_check() {
  return timed("operators", "cycle schedule equivalences", [] {
    using ops::CycleKind;
    auto acts = [](CycleKind c, std::size_t L) { return ops::generate_schedule(c, L).actions; };
    const bool two = acts(CycleKind::v, 2) == acts(CycleKind::f, 2) &&
                     acts(CycleKind::f, 2) == acts(CycleKind::w, 2);
    const bool three = acts(CycleKind::f, 3) == acts(CycleKind::w, 3);
    const bool four = acts(CycleKind::f, 4) != acts(CycleKind::w, 4);
    std::string d = std::string("V=F=W at 2: ") + (two ? "yes" : "no") +
                    ", F=W at 3: " + (three ? "yes" : "no") + ", F!=W at 4: " + (four ? "yes" : "no");
    return std::make_pair(two && three && four, d);
  });
}

CheckResult orthogonality_check() {
  return timed("operators", "orthogonal init Gram identity (gain sqrt 2)", [] {
    diff::SeededRng rng(3);
    const double gain = std::sqrt(2.0);
    double worst = 0.0;
    for (auto [m, n] : {std::pair<std::size_t, std::size_t>{32, 32}, {64, 16}, {10, 64}, {64, 1024}}) {
      std::vector<double> w(m * n);
      ops::orthogonal_fill(w, m, n, rng, gain);
      const std::size_t r = std::min(m, n);
      for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < r; ++j) {
          double s = 0.0;
          if (m >= n) {
            for (std::size_t k = 0; k < m; ++k) s += w[k * n + i] * w[k * n + j];
          } else {
            for (std::size_t k = 0; k < n; ++k) s += w[i * n + k] * w[j * n + k];
          }
          worst = std::max(worst, std::abs(s - (i == j ? gain * gain : 0.0)));
        }
      }
    }
    return std::make_pair(worst <= 1e-10, "max deviation " + fmt("%.1e", worst));
  });
}

std::vector<CheckResult> run_selftest() {
  std::vector<CheckResult> out = {darcy_order_check(), burgers_heat_check(),
                                  burgers_invariants_check(), schedule_check(),
                                  orthogonality_check()};
  for (auto& c : primitive_gradchecks()) out.push_back(std::move(c));
  for (auto& c : model_gradchecks()) out.push_back(std::move(c));
  return out;
}

std::string format_checks(const std::vector<CheckResult>& checks) {
  std::string s;
  std::size_t failed = 0;
  double total = 0.0;
  for (const auto& c : checks) {
    char buf[512];
    std::snprintf(buf, sizeof buf, "[%s] %-10s %-52s %8.3fs  %s\n", c.pass ? "PASS" : "FAIL",
                  c.module.c_str(), c.name.c_str(), c.seconds, c.detail.c_str());
    s += buf;
    failed += !c.pass;
    total += c.seconds;
  }
  char buf[128];
  std::snprintf(buf, sizeof buf, "%zu checks, %zu failed, %.2fs total\n", checks.size(), failed, total);
  s += buf;
  return s;
}

bool all_pass(const std::vector<CheckResult>& checks) {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
}

}  // namespace mgno::cli
