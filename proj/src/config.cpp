#include "fedsilo/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <optional>

namespace fedsilo {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// comments start at an unquoted '#'
std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    else if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

bool valid_key(const std::string& k) {
  if (k.empty()) return false;
  for (char c : k) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.')) return false;
  }
  return true;
}

std::optional<std::string> unquote(const std::string& tok, std::string& err) {
  if (tok.size() >= 1 && tok.front() == '"') {
    if (tok.size() < 2 || tok.back() != '"') {
      err = "unterminated string";
      return std::nullopt;
    }
    return tok.substr(1, tok.size() - 2);
  }
  return tok;
}

int levenshtein(const std::string& a, const std::string& b) {
  std::vector<int> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = static_cast<int>(j);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = static_cast<int>(i);
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const int sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

const std::vector<std::string>& known_paths() {
  static const std::vector<std::string> paths = {
      "scheme",
      "seeds",
      "epochs",
      "local_steps",
      "batch_size",
      "eta0",
      "gamma",
      "alpha",
      "beta",
      "n_groups",
      "n_select",
      "forced_k",
      "compute_kappa",
      "out",
      "scenario.kind",
      "scenario.n_clients",
      "scenario.classes",
      "scenario.feature_dim",
      "scenario.train_ratio",
      "scenario.n_sources",
      "scenario.train_n",
      "scenario.separation",
      "scenario.class_spread",
      "scenario.noise_sd",
      "scenario.disjoint_labels",
      "scenario.base_size",
      "scenario.min_size",
      "scenario.fixed_z",
      "scenario.n_shards",
      "scenario.shard_size",
      "scenario.paths",
      "arch.widths",
      "compare.schemes",
  };
  return paths;
}

std::string nearest_known(const std::string& path) {
  int best = std::numeric_limits<int>::max();
  std::string pick;
  for (const auto& k : known_paths()) {
    const int d = levenshtein(path, k);
    if (d < best) {
      best = d;
      pick = k;
    }
  }
  return pick;
}

bool parse_i64(const std::string& tok, std::int64_t& out) {
  try {
    std::size_t used = 0;
    out = std::stoll(tok, &used);
    return used == tok.size();
  } catch (const std::exception&) {
    return false;
  }
}

bool parse_u64(const std::string& tok, std::uint64_t& out) {
  if (!tok.empty() && tok[0] == '-') return false;
  try {
    std::size_t used = 0;
    out = std::stoull(tok, &used);
    return used == tok.size();
  } catch (const std::exception&) {
    return false;
  }
}

bool parse_f64(const std::string& tok, double& out) {
  try {
    std::size_t used = 0;
    out = std::stod(tok, &used);
    return used == tok.size();
  } catch (const std::exception&) {
    return false;
  }
}

// collects typed assignments from raw entries, remembering every complaint
class Builder {
 public:
  explicit Builder(const RawConfig& raw) : raw_(raw) {}

  ExperimentConfig build() {
    for (const auto& e : raw_.entries) apply(e);
    apply_env_seed();
    finish_defaults();
    validate();
    if (!problems_.empty()) {
      std::string msg = raw_.source.empty() ? "invalid configuration" : raw_.source;
      for (const auto& p : problems_) msg += "\n  " + p;
      throw ConfigError(msg);
    }
    return cfg_;
  }

 private:
  const RawConfig& raw_;
  ExperimentConfig cfg_;
  std::vector<std::string> problems_;
  bool arch_given_ = false;

  void complain(const RawEntry& e, const std::string& what) {
    std::string where = e.path;
    if (e.line > 0) where += " (line " + std::to_string(e.line) + ")";
    problems_.push_back(where + ": " + what);
  }

  void note(const std::string& what) { problems_.push_back(what); }

  bool want_scalar(const RawEntry& e) {
    if (e.is_array) {
      complain(e, "expected a single value, got an array");
      return false;
    }
    return true;
  }

  void set_int(const RawEntry& e, int& dst) {
    if (!want_scalar(e)) return;
    std::int64_t v = 0;
    if (!parse_i64(e.tokens[0], v)) {
      complain(e, "expected an integer, got '" + e.tokens[0] + "'");
      return;
    }
    dst = static_cast<int>(v);
  }

  void set_double(const RawEntry& e, double& dst) {
    if (!want_scalar(e)) return;
    double v = 0;
    if (!parse_f64(e.tokens[0], v)) {
      complain(e, "expected a number, got '" + e.tokens[0] + "'");
      return;
    }
    dst = v;
  }

  void set_bool(const RawEntry& e, bool& dst) {
    if (!want_scalar(e)) return;
    if (e.tokens[0] == "true") dst = true;
    else if (e.tokens[0] == "false") dst = false;
    else complain(e, "expected true or false, got '" + e.tokens[0] + "'");
  }

  void set_string(const RawEntry& e, std::string& dst) {
    if (!want_scalar(e)) return;
    dst = e.tokens[0];
  }

  void apply(const RawEntry& e) {
    const std::string& p = e.path;
    if (p == "scheme") {
      if (!want_scalar(e)) return;
      try {
        cfg_.scheme = scheme_from_string(e.tokens[0]);
      } catch (const std::invalid_argument& ex) {
        complain(e, ex.what());
      }
    } else if (p == "seeds") {
      if (!e.is_array) {
        complain(e, "expected an array of seeds");
        return;
      }
      std::vector<std::uint64_t> seeds;
      for (const auto& t : e.tokens) {
        std::uint64_t v = 0;
        if (!parse_u64(t, v)) {
          complain(e, "expected a non-negative integer seed, got '" + t + "'");
          return;
        }
        seeds.push_back(v);
      }
      cfg_.seeds = std::move(seeds);
    } else if (p == "epochs") {
      set_int(e, cfg_.train.epochs);
    } else if (p == "local_steps") {
      set_int(e, cfg_.train.local_steps);
    } else if (p == "batch_size") {
      set_int(e, cfg_.train.batch_size);
    } else if (p == "eta0") {
      set_double(e, cfg_.train.eta0);
    } else if (p == "gamma") {
      set_double(e, cfg_.train.gamma);
    } else if (p == "alpha") {
      set_double(e, cfg_.train.alpha);
    } else if (p == "beta") {
      set_double(e, cfg_.train.beta);
    } else if (p == "n_groups") {
      set_int(e, cfg_.train.n_groups);
    } else if (p == "n_select") {
      set_int(e, cfg_.train.n_select);
    } else if (p == "forced_k") {
      int v = 0;
      set_int(e, v);
      cfg_.train.forced_k = v;
    } else if (p == "compute_kappa") {
      set_bool(e, cfg_.train.compute_kappa);
    } else if (p == "out") {
      set_string(e, cfg_.out);
    } else if (p == "scenario.kind") {
      if (!want_scalar(e)) return;
      try {
        cfg_.scenario.kind = scenario_kind_from_string(e.tokens[0]);
      } catch (const std::invalid_argument& ex) {
        complain(e, ex.what());
      }
    } else if (p == "scenario.n_clients") {
      set_int(e, cfg_.scenario.n_clients);
    } else if (p == "scenario.classes") {
      set_int(e, cfg_.scenario.classes);
    } else if (p == "scenario.feature_dim") {
      set_int(e, cfg_.scenario.feature_dim);
    } else if (p == "scenario.train_ratio") {
      set_double(e, cfg_.scenario.train_ratio);
    } else if (p == "scenario.n_sources") {
      set_int(e, cfg_.scenario.n_sources);
    } else if (p == "scenario.train_n") {
      set_int(e, cfg_.scenario.train_n);
    } else if (p == "scenario.separation") {
      set_double(e, cfg_.scenario.separation);
    } else if (p == "scenario.class_spread") {
      set_double(e, cfg_.scenario.class_spread);
    } else if (p == "scenario.noise_sd") {
      set_double(e, cfg_.scenario.noise_sd);
    } else if (p == "scenario.disjoint_labels") {
      set_bool(e, cfg_.scenario.disjoint_labels);
    } else if (p == "scenario.base_size") {
      set_int(e, cfg_.scenario.base_size);
    } else if (p == "scenario.min_size") {
      set_int(e, cfg_.scenario.min_size);
    } else if (p == "scenario.fixed_z") {
      set_double(e, cfg_.scenario.fixed_z);
    } else if (p == "scenario.n_shards") {
      set_int(e, cfg_.scenario.n_shards);
    } else if (p == "scenario.shard_size") {
      set_int(e, cfg_.scenario.shard_size);
    } else if (p == "scenario.paths") {
      if (!e.is_array) {
        complain(e, "expected an array of file paths");
        return;
      }
      cfg_.scenario.paths = e.tokens;
    } else if (p == "arch.widths") {
      if (!e.is_array) {
        complain(e, "expected an array of layer widths");
        return;
      }
      std::vector<int> widths;
      for (const auto& t : e.tokens) {
        std::int64_t v = 0;
        if (!parse_i64(t, v)) {
          complain(e, "expected an integer width, got '" + t + "'");
          return;
        }
        widths.push_back(static_cast<int>(v));
      }
      cfg_.arch.widths = std::move(widths);
      arch_given_ = true;
    } else if (p == "compare.schemes") {
      if (!e.is_array) {
        complain(e, "expected an array of scheme names");
        return;
      }
      std::vector<Scheme> schemes;
      for (const auto& t : e.tokens) {
        try {
          schemes.push_back(scheme_from_string(t));
        } catch (const std::invalid_argument& ex) {
          complain(e, ex.what());
          return;
        }
      }
      cfg_.compare_schemes = std::move(schemes);
    } else if (p.rfind("arrival.", 0) == 0) {
      const std::string sub = p.substr(8);
      std::int64_t epoch = 0;
      if (!parse_i64(sub, epoch)) {
        complain(e, "arrival keys must be epoch numbers");
        return;
      }
      int count = 0;
      set_int(e, count);
      cfg_.train.arrivals[static_cast<int>(epoch)] = count;
    } else if (p.rfind("sweep.", 0) == 0) {
      const std::string axis = p.substr(6);
      const auto& known = known_paths();
      const bool sweepable = std::find(known.begin(), known.end(), axis) != known.end() &&
                             axis != "seeds" && axis != "out" && axis != "scenario.paths" &&
                             axis != "arch.widths" && axis != "compare.schemes";
      if (!sweepable) {
        complain(e, "'" + axis + "' cannot be swept (did you mean '" + nearest_known(axis) + "'?)");
        return;
      }
      if (!e.is_array || e.tokens.empty()) {
        complain(e, "expected a non-empty array of values to sweep");
        return;
      }
      for (auto& ax : cfg_.sweep) {
        if (ax.first == axis) {
          ax.second = e.tokens;
          return;
        }
      }
      cfg_.sweep.emplace_back(axis, e.tokens);
    } else {
      complain(e, "unknown key (did you mean '" + nearest_known(p) + "'?)");
    }
  }

  void apply_env_seed() {
    const char* env = std::getenv("FEDSILO_SEED");
    if (env == nullptr || *env == '\0') return;
    std::uint64_t v = 0;
    if (!parse_u64(env, v)) {
      note(std::string("FEDSILO_SEED: expected a non-negative integer, got '") + env + "'");
      return;
    }
    cfg_.seeds = {v};
  }

  int effective_dim() const {
    return cfg_.scenario.kind == ScenarioKind::motivating ? 8 : cfg_.scenario.feature_dim;
  }

  int effective_classes() const {
    return cfg_.scenario.kind == ScenarioKind::motivating ? 10 : cfg_.scenario.classes;
  }

  void finish_defaults() {
    if (!arch_given_) cfg_.arch.widths = {effective_dim(), 32, effective_classes()};
  }

  void validate() {
    const TrainParams& tp = cfg_.train;
    if (cfg_.seeds.empty()) note("seeds: must not be empty");
    if (tp.epochs < 0) note("epochs: must be >= 0");
    if (tp.local_steps < 1) note("local_steps: must be >= 1");
    if (tp.batch_size < 1) note("batch_size: must be >= 1");
    if (!(tp.eta0 > 0.0)) note("eta0: must be > 0");
    if (!(tp.gamma > 0.0 && tp.gamma <= 1.0)) note("gamma: must be in (0, 1]");
    if (!(tp.alpha > 0.0)) note("alpha: must be > 0");
    if (!(tp.beta > 0.0)) note("beta: must be > 0");
    if (tp.n_groups < 1) note("n_groups: must be >= 1");
    if (tp.n_select < 1) note("n_select: must be >= 1");
    if (tp.forced_k && *tp.forced_k < 1) note("forced_k: must be >= 1");
    for (const auto& [epoch, count] : tp.arrivals) {
      if (epoch < 1) note("arrival." + std::to_string(epoch) + ": epoch must be >= 1");
      if (count < 1) note("arrival." + std::to_string(epoch) + ": count must be >= 1");
    }
    const ScenarioSpec& sc = cfg_.scenario;
    if (sc.kind == ScenarioKind::csv) {
      if (sc.paths.empty()) note("scenario.paths: csv scenarios need at least one file");
    } else if (sc.kind != ScenarioKind::motivating) {
      if (sc.n_clients < 1) note("scenario.n_clients: must be >= 1");
      if (sc.classes < 2) note("scenario.classes: must be >= 2");
      if (sc.feature_dim < 1) note("scenario.feature_dim: must be >= 1");
    }
    if (!(sc.train_ratio > 0.0 && sc.train_ratio < 1.0))
      note("scenario.train_ratio: must be in (0, 1)");
    if (cfg_.arch.widths.size() < 2) {
      note("arch.widths: need an input and an output layer");
    } else {
      for (int w : cfg_.arch.widths) {
        if (w < 1) {
          note("arch.widths: widths must be >= 1");
          break;
        }
      }
      if (cfg_.arch.widths.front() != effective_dim())
        note("arch.widths: first width must equal the feature dimension (" +
             std::to_string(effective_dim()) + ")");
      if (cfg_.arch.widths.back() != effective_classes())
        note("arch.widths: last width must equal the class count (" +
             std::to_string(effective_classes()) + ")");
    }
  }
};

// splits "[a, b, c]" into trimmed unquoted elements
bool parse_array(const std::string& body, std::vector<std::string>& out, std::string& err) {
  out.clear();
  std::string cur;
  bool quoted = false;
  bool any = false;
  for (char c : body) {
    if (c == '"') {
      quoted = !quoted;
      cur += c;
    } else if (c == ',' && !quoted) {
      const std::string t = trim(cur);
      if (t.empty()) {
        err = "empty array element";
        return false;
      }
      auto u = unquote(t, err);
      if (!u) return false;
      out.push_back(*u);
      cur.clear();
      any = true;
    } else {
      cur += c;
    }
  }
  if (quoted) {
    err = "unterminated string";
    return false;
  }
  const std::string t = trim(cur);
  if (!t.empty()) {
    auto u = unquote(t, err);
    if (!u) return false;
    out.push_back(*u);
  } else if (any) {
    // trailing comma is fine
  }
  return true;
}

bool parse_value(const std::string& text, RawEntry& e, std::string& err) {
  const std::string v = trim(text);
  if (v.empty()) {
    err = "missing value";
    return false;
  }
  if (v.front() == '[') {
    if (v.back() != ']') {
      err = "array must close on the same line";
      return false;
    }
    e.is_array = true;
    return parse_array(v.substr(1, v.size() - 2), e.tokens, err);
  }
  auto u = unquote(v, err);
  if (!u) return false;
  e.tokens = {*u};
  return true;
}

}  // namespace

RawConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config file");
  RawConfig raw;
  raw.source = path;
  std::vector<std::string> problems;
  static const std::vector<std::string> sections = {"scenario", "arch", "arrival", "sweep",
                                                    "compare"};
  std::string section;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string body = trim(strip_comment(line));
    if (body.empty()) continue;
    const std::string where = path + ":" + std::to_string(lineno);
    if (body.front() == '[') {
      if (body.back() != ']') {
        problems.push_back(where + ": malformed section header");
        continue;
      }
      const std::string name = trim(body.substr(1, body.size() - 2));
      if (std::find(sections.begin(), sections.end(), name) == sections.end()) {
        int best = std::numeric_limits<int>::max();
        std::string pick;
        for (const auto& s : sections) {
          const int d = levenshtein(name, s);
          if (d < best) {
            best = d;
            pick = s;
          }
        }
        problems.push_back(where + ": unknown section '" + name + "' (did you mean '" + pick +
                           "'?)");
        section = name;  // still prefix its keys so they are reported once, here
        continue;
      }
      section = name;
      continue;
    }
    const std::size_t eq = body.find('=');
    if (eq == std::string::npos) {
      problems.push_back(where + ": expected key = value");
      continue;
    }
    RawEntry e;
    e.line = lineno;
    const std::string key = trim(body.substr(0, eq));
    if (!valid_key(key)) {
      problems.push_back(where + ": malformed key '" + key + "'");
      continue;
    }
    e.path = section.empty() ? key : section + "." + key;
    std::string err;
    if (!parse_value(body.substr(eq + 1), e, err)) {
      problems.push_back(where + ": " + err);
      continue;
    }
    raw.entries.push_back(std::move(e));
  }
  if (!problems.empty()) {
    std::string msg = path;
    for (const auto& p : problems) msg += "\n  " + p;
    throw ConfigError(msg);
  }
  return raw;
}

void apply_override(RawConfig& raw, const std::string& spec) {
  const std::size_t eq = spec.find('=');
  if (eq == std::string::npos) throw ConfigError("override '" + spec + "': expected key=value");
  RawEntry e;
  const std::string key = trim(spec.substr(0, eq));
  if (!valid_key(key)) throw ConfigError("override '" + spec + "': malformed key");
  e.path = key;
  std::string err;
  if (!parse_value(spec.substr(eq + 1), e, err))
    throw ConfigError("override '" + spec + "': " + err);
  raw.entries.push_back(std::move(e));
}

ExperimentConfig build_config(const RawConfig& raw) { return Builder(raw).build(); }

ExperimentConfig parse_config(const std::string& path) {
  return build_config(load_config_file(path));
}

ExperimentSetup to_setup(const ExperimentConfig& cfg) {
  ExperimentSetup s;
  s.scenario = cfg.scenario;
  s.scheme = cfg.scheme;
  s.arch = cfg.arch;
  s.train = cfg.train;
  return s;
}

}  // namespace fedsilo
