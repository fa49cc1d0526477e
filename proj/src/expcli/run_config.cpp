#include "mgno/expcli/run_config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace mgno::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string strip_comment(const std::string& line) {
  const auto pos = line.find('#');
  return pos == std::string::npos ? line : line.substr(0, pos);
}

std::size_t parse_count(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  unsigned long long n = 0;
  try {
    if (!v.empty() && v[0] == '-') throw std::invalid_argument("negative");
    n = std::stoull(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) {
    throw ConfigError("'" + key + "' expects a non-negative integer, got '" + v + "'");
  }
  return std::size_t(n);
}

double parse_real(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) {
    throw ConfigError("'" + key + "' expects a number, got '" + v + "'");
  }
  return x;
}

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

template <class F>
void wrap(const std::string& key, F&& f) {
  try {
    f();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError("'" + key + "': " + e.what());
  }
}

/// Applies a model-level key; returns false if the key is not a model key.
bool set_model_key(ops::ModelConfig& m, const std::string& key, const std::string& v) {
  if (key == "model") wrap(key, [&] { m.kind = ops::parse_model_kind(v); });
  else if (key == "cycle") wrap(key, [&] { m.cycle = ops::parse_cycle_kind(v); });
  else if (key == "scales") m.scales = parse_count(key, v);
  else if (key == "depth") m.depth = parse_count(key, v);
  else if (key == "intra_share") wrap(key, [&] { m.intra_cycle_sharing = parse_bool(v); });
  else if (key == "iter_share") wrap(key, [&] { m.iteration_sharing = parse_bool(v); });
  else if (key == "skip") wrap(key, [&] { m.skip_connections = parse_bool(v); });
  else if (key == "width") m.width = parse_count(key, v);
  else if (key == "kwidth") m.kernel_width = parse_count(key, v);
  else if (key == "mlp_depth") m.mlp_depth = parse_count(key, v);
  else if (key == "mlp_width") m.mlp_width = parse_count(key, v);
  else if (key == "gcn_depth") m.gcn_depth = parse_count(key, v);
  else return false;
  return true;
}

bool set_train_key(train::TrainConfig& t, const std::string& key, const std::string& v) {
  if (key == "lr") t.lr = parse_real(key, v);
  else if (key == "epochs") t.epochs = parse_count(key, v);
  else if (key == "beta1") t.beta1 = parse_real(key, v);
  else if (key == "beta2") t.beta2 = parse_real(key, v);
  else if (key == "eps") t.eps = parse_real(key, v);
  else if (key == "init") wrap(key, [&] { t.init = ops::parse_init_kind(v); });
  else if (key == "gain") t.gain = parse_real(key, v);
  else if (key == "seed") t.seed = parse_count(key, v);
  else if (key == "batch") t.batch_size = parse_count(key, v);
  else if (key == "eval_every") t.eval_every = parse_count(key, v);
  else return false;
  return true;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  return out;
}

}  // namespace

bool parse_bool(const std::string& s) {
  std::string l = s;
  std::transform(l.begin(), l.end(), l.begin(), [](unsigned char c) { return std::tolower(c); });
  if (l == "1" || l == "true" || l == "on" || l == "yes") return true;
  if (l == "0" || l == "false" || l == "off" || l == "no") return false;
  throw ConfigError("expected a boolean (1/0, true/false, on/off, yes/no), got '" + s + "'");
}

void set_run_key(RunConfig& cfg, const std::string& key, const std::string& value) {
  if (value.empty()) throw ConfigError("'" + key + "' has an empty value");
  if (key == "data") cfg.data = value;
  else if (key == "out") cfg.out = value;
  else if (!set_model_key(cfg.model, key, value) && !set_train_key(cfg.train, key, value)) {
    throw ConfigError("unknown key '" + key + "'");
  }
}

RunConfig parse_run_config(const std::string& text, RunConfig base) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(strip_comment(line));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    const auto key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    if (!seen.insert(key).second) {
      throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    }
    try {
      set_run_key(base, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return base;
}

RunConfig load_run_config(const std::string& path, RunConfig base) {
  return parse_run_config(read_file(path), std::move(base));
}

std::string format_run_config(const RunConfig& c) {
  const auto& m = c.model;
  const auto& t = c.train;
  std::string s;
  auto line = [&](const std::string& k, const std::string& v) { s += k + " = " + v + "\n"; };
  line("data", c.data.empty() ? "-" : c.data);
  line("out", c.out);
  line("model", std::string(ops::to_string(m.kind)));
  line("cycle", std::string(ops::to_string(m.cycle)));
  line("scales", std::to_string(m.scales));
  line("depth", std::to_string(m.depth));
  line("intra_share", m.intra_cycle_sharing ? "1" : "0");
  line("iter_share", m.iteration_sharing ? "1" : "0");
  line("skip", m.skip_connections ? "1" : "0");
  line("width", std::to_string(m.width));
  line("kwidth", std::to_string(m.kernel_width));
  line("mlp_depth", std::to_string(m.mlp_depth));
  line("mlp_width", std::to_string(m.mlp_width));
  line("gcn_depth", std::to_string(m.gcn_depth));
  line("lr", fmt(t.lr));
  line("epochs", std::to_string(t.epochs));
  line("beta1", fmt(t.beta1));
  line("beta2", fmt(t.beta2));
  line("eps", fmt(t.eps));
  line("init", std::string(ops::to_string(t.init)));
  line("gain", fmt(t.gain));
  line("seed", std::to_string(t.seed));
  line("batch", std::to_string(t.batch_size));
  line("eval_every", std::to_string(t.eval_every));
  return s;
}

GridSpec parse_grid_spec(const std::string& text) {
  GridSpec spec;
  ops::ModelConfig defaults;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(strip_comment(line));
    if (line.empty()) continue;
    const std::string where = "grid spec line " + std::to_string(lineno) + ": ";
    std::istringstream words(line);
    std::string verb, tok;
    words >> verb;
    std::vector<std::pair<std::string, std::vector<std::string>>> assignments;
    while (words >> tok) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos || eq == 0 || eq + 1 == tok.size()) {
        throw ConfigError(where + "expected key=value, got '" + tok + "'");
      }
      assignments.push_back({tok.substr(0, eq), split(tok.substr(eq + 1), ',')});
    }
    try {
      if (verb == "set") {
        for (const auto& [k, vs] : assignments) {
          if (vs.size() != 1) throw ConfigError("'set' takes single values");
          if (k == "seed") throw ConfigError("seeds are chosen per run, not in the grid spec");
          if (!set_model_key(defaults, k, vs[0]) && !set_train_key(spec.train, k, vs[0])) {
            throw ConfigError("unknown key '" + k + "'");
          }
        }
      } else if (verb == "cell") {
        std::vector<ops::ModelConfig> expanded = {defaults};
        bool scales_given = false;
        for (const auto& [k, vs] : assignments) {
          scales_given |= k == "scales";
          std::vector<ops::ModelConfig> next;
          for (const auto& base : expanded) {
            for (const auto& v : vs) {
              auto c = base;
              if (!set_model_key(c, k, v)) throw ConfigError("unknown cell key '" + k + "'");
              next.push_back(c);
            }
          }
          expanded = std::move(next);
        }
        for (auto& c : expanded) {
          if (!scales_given && c.kind != ops::ModelKind::mgno) c.scales = 1;
          spec.cells.push_back(c);
        }
      } else {
        throw ConfigError("lines start with 'set' or 'cell', got '" + verb + "'");
      }
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }
  if (spec.cells.empty()) throw ConfigError("grid spec has no cells");
  return spec;
}

GridSpec load_grid_spec(const std::string& path) { return parse_grid_spec(read_file(path)); }

}  // namespace mgno::cli
