#include "mgno/pdegen/dataset.hpp"

#include <numeric>
#include <stdexcept>

#include "mgno/pdegen/burgers.hpp"
#include "mgno/pdegen/darcy.hpp"

namespace mgno::pde {

std::string_view to_string(PdeKind k) { return k == PdeKind::darcy ? "darcy" : "burgers"; }

PdeKind parse_pde_kind(std::string_view s) {
  if (s == "darcy") return PdeKind::darcy;
  if (s == "burgers") return PdeKind::burgers;
  throw std::invalid_argument("unknown pde '" + std::string(s) + "'");
}

DatasetMeta default_meta(PdeKind pde) {
  DatasetMeta m;
  m.pde = pde;
  if (pde == PdeKind::darcy) {
    m.grid = 64;
    m.grf = GrfSpec{2.0, 9.0, 1.0, 64};
  } else {
    m.grid = 1024;
    m.grf = GrfSpec{2.0, 5.0, 25.0, 1024};
  }
  return m;
}

std::size_t Field::sample_size() const {
  return std::accumulate(shape.begin() + 1, shape.end(), std::size_t{1}, std::multiplies<>());
}

const Field& Dataset::field(const std::string& name) const {
  auto it = fields.find(name);
  if (it == fields.end()) throw std::out_of_range("dataset has no field '" + name + "'");
  return it->second;
}

void validate(const DatasetMeta& meta) {
  if (meta.n_train + meta.n_test == 0) throw std::invalid_argument("dataset: no samples requested");
  if (meta.grf.resolution != meta.grid) {
    throw std::invalid_argument("dataset: GRF resolution must equal the grid size");
  }
  validate(meta.grf, meta.pde == PdeKind::darcy ? 2 : 1);
  if (meta.pde == PdeKind::darcy) {
    if (!(meta.a_lo > 0.0 && meta.a_hi > 0.0)) {
      throw std::invalid_argument("dataset: Darcy coefficient levels must be positive");
    }
  } else if (!(meta.nu > 0.0) || !(meta.t_end > 0.0)) {
    throw std::invalid_argument("dataset: Burgers needs nu > 0 and t_end > 0");
  }
}

std::uint64_t sample_stream(bool test, std::size_t i) {
  return (test ? (std::uint64_t{1} << 32) : 0) | std::uint64_t(i);
}

Dataset generate_dataset(const DatasetMeta& meta) {
  validate(meta);
  Dataset ds;
  ds.meta = meta;
  const std::size_t n = meta.n_samples(), s = meta.grid;
  if (meta.pde == PdeKind::darcy) {
    Field a{{n, s, s}, {}}, grad{{n, 2, s, s}, {}}, u{{n, s, s}, {}};
    for (std::size_t i = 0; i < n; ++i) {
      const bool test = i >= meta.n_train;
      diff::SeededRng rng(meta.seed, sample_stream(test, test ? i - meta.n_train : i));
      const auto coef = threshold_coefficient(sample_grf_2d(meta.grf, rng), meta.a_hi, meta.a_lo);
      std::vector<double> sol;
      try {
        sol = darcy_solve(coef, meta.forcing, s).u;
      } catch (const SolverError& e) {
        throw std::runtime_error("sample " + std::to_string(i) + ": " + e.what());
      }
      const auto g = grid_gradient(coef, s);
      a.data.insert(a.data.end(), coef.begin(), coef.end());
      grad.data.insert(grad.data.end(), g.begin(), g.end());
      u.data.insert(u.data.end(), sol.begin(), sol.end());
    }
    ds.fields["a"] = std::move(a);
    ds.fields["grad_a"] = std::move(grad);
    ds.fields["u"] = std::move(u);
  } else {
    Field u0{{n, s}, {}}, u1{{n, s}, {}};
    for (std::size_t i = 0; i < n; ++i) {
      const bool test = i >= meta.n_train;
      diff::SeededRng rng(meta.seed, sample_stream(test, test ? i - meta.n_train : i));
      const auto init = sample_grf_1d_periodic(meta.grf, rng);
      std::vector<double> sol;
      try {
        sol = burgers_solve(init, meta.nu, meta.t_end).u;
      } catch (const BlowUpError& e) {
        throw std::runtime_error("sample " + std::to_string(i) + ": " + e.what());
      }
      u0.data.insert(u0.data.end(), init.begin(), init.end());
      u1.data.insert(u1.data.end(), sol.begin(), sol.end());
    }
    ds.fields["u0"] = std::move(u0);
    ds.fields["u1"] = std::move(u1);
  }
  return ds;
}

}  // namespace mgno::pde
