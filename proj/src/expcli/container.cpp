#include "mgno/expcli/container.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace mgno::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

static_assert(std::endian::native == std::endian::little, "container I/O assumes a little-endian host");

json grf_json(const pde::GrfSpec& g) {
  return {{"alpha", g.alpha}, {"tau", g.tau}, {"sigma", g.sigma}, {"resolution", g.resolution}};
}

json meta_to_json(const pde::DatasetMeta& m) {
  return {{"pde", std::string(pde::to_string(m.pde))},
          {"n_train", m.n_train},
          {"n_test", m.n_test},
          {"grid", m.grid},
          {"seed", m.seed},
          {"grf", grf_json(m.grf)},
          {"a_hi", m.a_hi},
          {"a_lo", m.a_lo},
          {"forcing", m.forcing},
          {"nu", m.nu},
          {"t_end", m.t_end}};
}

pde::DatasetMeta meta_from_json(const json& j) {
  pde::DatasetMeta m;
  m.pde = pde::parse_pde_kind(j.at("pde").get<std::string>());
  m.n_train = j.at("n_train").get<std::size_t>();
  m.n_test = j.at("n_test").get<std::size_t>();
  m.grid = j.at("grid").get<std::size_t>();
  m.seed = j.at("seed").get<std::uint64_t>();
  const auto& g = j.at("grf");
  m.grf.alpha = g.at("alpha").get<double>();
  m.grf.tau = g.at("tau").get<double>();
  m.grf.sigma = g.at("sigma").get<double>();
  m.grf.resolution = g.at("resolution").get<std::size_t>();
  m.a_hi = j.at("a_hi").get<double>();
  m.a_lo = j.at("a_lo").get<double>();
  m.forcing = j.at("forcing").get<double>();
  m.nu = j.at("nu").get<double>();
  m.t_end = j.at("t_end").get<double>();
  return m;
}

std::size_t product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

}  // namespace

std::string meta_json(const pde::Dataset& data) {
  json fields = json::object();
  for (const auto& [name, f] : data.fields) {
    fields[name] = {{"shape", f.shape}, {"file", name + ".f64"}};
  }
  json j = {{"format_version", kContainerFormatVersion},
            {"byte_order", "little"},
            {"dtype", "f64"},
            {"meta", meta_to_json(data.meta)},
            {"fields", fields}};
  return j.dump(2) + "\n";
}

void write_container(const fs::path& dir, const pde::Dataset& data) {
  fs::create_directories(dir);
  for (const auto& [name, f] : data.fields) {
    if (product(f.shape) != f.data.size()) {
      throw ContainerError("field '" + name + "' data does not match its shape");
    }
    std::ofstream out(dir / (name + ".f64"), std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(f.data.data()),
              std::streamsize(f.data.size() * sizeof(double)));
    if (!out) throw ContainerError("cannot write " + (dir / (name + ".f64")).string());
  }
  std::ofstream meta(dir / "meta.json", std::ios::trunc);
  meta << meta_json(data);
  if (!meta) throw ContainerError("cannot write " + (dir / "meta.json").string());
}

pde::Dataset read_container(const fs::path& dir) {
  std::ifstream in(dir / "meta.json");
  if (!in) throw ContainerError("no meta.json in " + dir.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ContainerError("meta.json is not valid JSON: " + std::string(e.what()));
  }
  if (!j.contains("format_version") || !j["format_version"].is_number_integer()) {
    throw ContainerError("meta.json has no integer format_version");
  }
  const int version = j["format_version"].get<int>();
  if (version != kContainerFormatVersion) {
    throw ContainerError("unsupported container format_version " + std::to_string(version) +
                         " (this build reads " + std::to_string(kContainerFormatVersion) + ")");
  }
  if (j.value("byte_order", "") != "little" || j.value("dtype", "") != "f64") {
    throw ContainerError("container must hold little-endian f64 arrays");
  }
  pde::Dataset data;
  try {
    data.meta = meta_from_json(j.at("meta"));
    for (const auto& [name, spec] : j.at("fields").items()) {
      pde::Field f;
      f.shape = spec.at("shape").get<std::vector<std::size_t>>();
      const fs::path file = dir / spec.at("file").get<std::string>();
      const std::size_t n = product(f.shape);
      std::error_code ec;
      const auto bytes = fs::file_size(file, ec);
      if (ec) throw ContainerError("missing field file " + file.string());
      if (bytes != n * sizeof(double)) {
        throw ContainerError("field '" + name + "': file has " + std::to_string(bytes) +
                             " bytes, shape requires " + std::to_string(n * sizeof(double)));
      }
      f.data.resize(n);
      std::ifstream raw(file, std::ios::binary);
      raw.read(reinterpret_cast<char*>(f.data.data()), std::streamsize(bytes));
      if (!raw) throw ContainerError("cannot read " + file.string());
      data.fields.emplace(name, std::move(f));
    }
  } catch (const json::exception& e) {
    throw ContainerError("meta.json is malformed: " + std::string(e.what()));
  }
  pde::validate(data.meta);
  const auto expect = [&](const std::string& name) {
    const auto it = data.fields.find(name);
    if (it == data.fields.end()) throw ContainerError("container lacks field '" + name + "'");
    if (it->second.shape.empty() || it->second.shape[0] != data.meta.n_samples()) {
      throw ContainerError("field '" + name + "' does not have one entry per sample");
    }
  };
  if (data.meta.pde == pde::PdeKind::darcy) {
    for (const char* f : {"a", "grad_a", "u"}) expect(f);
  } else {
    for (const char* f : {"u0", "u1"}) expect(f);
  }
  return data;
}

}  // namespace mgno::cli
