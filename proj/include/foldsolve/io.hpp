#pragma once

// Serialization: CSV tables and traces, JSON specs, atomic file writes.

#include "foldsolve/experiments.hpp"

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace foldsolve {

using Json = nlohmann::json;

/// Thrown for malformed or invalid configuration; `field` names the offending key.
class ConfigError : public InvalidInput {
public:
  ConfigError(std::string field, const std::string &message)
      : InvalidInput(field.empty() ? message : field + ": " + message), field_(std::move(field)) {}
  const std::string &field() const { return field_; }

private:
  std::string field_;
};

inline std::string format_double(double x) {
  if (std::isnan(x))
    return "nan";
  if (std::isinf(x))
    return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string hex64(std::uint64_t h) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline std::uint64_t hash_string(const std::string &s) { return fnv1a(s.data(), s.size()); }

/// Writes to a sibling temp file, then renames over the target.
inline void atomic_write(const std::filesystem::path &path, const std::string &content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path())
    fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out)
      throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out << content;
    out.flush();
    if (!out) {
      out.close();
      fs::remove(tmp);
      throw std::runtime_error("write failed for " + tmp.string());
    }
  }
  fs::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw ConfigError("", "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// CSV

inline std::string csv_cell(const Cell &c) {
  if (const auto *i = std::get_if<std::int64_t>(&c))
    return std::to_string(*i);
  if (const auto *d = std::get_if<double>(&c))
    return format_double(*d);
  const std::string &s = std::get<std::string>(c);
  if (s.find_first_of(",\"\n") == std::string::npos)
    return s;
  std::string quoted = "\"";
  for (char ch : s) {
    if (ch == '"')
      quoted += '"';
    quoted += ch;
  }
  return quoted + "\"";
}

/// Header comment lines ("# key=value"), column row, data rows.
inline std::string table_to_csv(const Table &t,
                                const std::vector<std::pair<std::string, std::string>> &meta = {}) {
  std::string out;
  for (const auto &[k, v] : meta)
    out += "# " + k + "=" + v + "\n";
  for (std::size_t j = 0; j < t.columns.size(); ++j)
    out += (j ? "," : "") + t.columns[j];
  out += "\n";
  for (const auto &row : t.rows) {
    for (std::size_t j = 0; j < row.size(); ++j)
      out += (j ? "," : "") + csv_cell(row[j]);
    out += "\n";
  }
  return out;
}

inline const std::vector<std::string> &trace_columns() {
  static const std::vector<std::string> cols{"iter",         "err_to_ref", "step_norm",
                                             "objective",    "support_size", "prox_calls",
                                             "elapsed_seconds"};
  return cols;
}

inline std::string trace_to_csv(const IterationTrace &trace) {
  Table t{trace_columns(), {}};
  for (const auto &r : trace.records)
    t.rows.push_back({static_cast<std::int64_t>(r.iter), r.err_to_ref, r.step_norm, r.objective,
                      static_cast<std::int64_t>(r.support_size), r.prox_calls, r.elapsed_seconds});
  return table_to_csv(t);
}

inline double parse_number(const std::string &s) {
  if (s == "nan")
    return std::nan("");
  if (s == "inf")
    return std::numeric_limits<double>::infinity();
  if (s == "-inf")
    return -std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  const double x = std::stod(s, &used);
  if (used != s.size())
    throw InvalidInput("not a number: '" + s + "'");
  return x;
}

/// Reads a trace written by trace_to_csv; sign patterns are not stored.
inline IterationTrace trace_from_csv(const std::string &csv) {
  std::istringstream in(csv);
  std::string line;
  IterationTrace trace;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#')
      continue;
    std::vector<std::string> fields;
    std::stringstream ls(line);
    for (std::string f; std::getline(ls, f, ',');)
      fields.push_back(f);
    if (!header) {
      if (fields != trace_columns())
        throw InvalidInput("trace csv: unexpected header '" + line + "'");
      header = true;
      continue;
    }
    if (fields.size() != trace_columns().size())
      throw InvalidInput("trace csv: wrong field count in '" + line + "'");
    IterationRecord r;
    r.iter = std::stoll(fields[0]);
    r.err_to_ref = parse_number(fields[1]);
    r.step_norm = parse_number(fields[2]);
    r.objective = parse_number(fields[3]);
    r.support_size = std::stoll(fields[4]);
    r.prox_calls = std::stoll(fields[5]);
    r.elapsed_seconds = parse_number(fields[6]);
    trace.records.push_back(std::move(r));
  }
  if (!header)
    throw InvalidInput("trace csv: missing header");
  return trace;
}

// ---------------------------------------------------------------------------
// JSON

inline Json vector_to_json(const RealVector &x) {
  Json a = Json::array();
  for (Index i = 0; i < x.size(); ++i)
    a.push_back(x(i));
  return a;
}

inline Json finite_or_null(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

inline Json spec_to_json(const ExperimentSpec &s) {
  Json j;
  j["experiment"] = to_string(s.name);
  j["m"] = s.m;
  j["n"] = s.n;
  j["s"] = s.s;
  j["q"] = s.q;
  j["noise_level"] = s.noise_level;
  j["ensemble"] = to_string(s.ensemble);
  j["entry_law"] = to_string(s.entry_law);
  j["betas"] = s.betas;
  j["ms"] = s.ms;
  j["trials"] = s.trials;
  j["seed"] = s.seed;
  j["beta"] = s.beta;
  j["alpha"] = s.alpha;
  j["mu"] = s.mu;
  j["target_support"] = s.target_support;
  j["err_target"] = s.err_target;
  j["tail_fraction"] = s.tail_fraction;
  j["iterations"] = s.iterations;
  j["timing_repeats"] = s.timing_repeats;
  j["max_iters"] = s.max_iters;
  j["stop_tol"] = s.stop_tol;
  j["inner_tol"] = s.inner_tol;
  return j;
}

inline std::string spec_hash(const ExperimentSpec &s) { return hex64(hash_string(spec_to_json(s).dump())); }

/// Strict reader: every key must be consumed, types are checked per field.
class ConfigReader {
public:
  ConfigReader(const Json &obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object())
      throw ConfigError(path_.empty() ? "<root>" : path_, "expected a JSON object");
  }

  bool has(const std::string &key) const { return obj_.contains(key); }

  template <class T> T get(const std::string &key, const T &fallback) {
    if (!obj_.contains(key))
      return fallback;
    return required<T>(key);
  }

  template <class T> T required(const std::string &key) {
    used_.insert(key);
    if (!obj_.contains(key))
      throw ConfigError(field(key), "missing required key");
    const Json &v = obj_.at(key);
    check_type<T>(key, v);
    try {
      return v.get<T>();
    } catch (const Json::exception &e) {
      throw ConfigError(field(key), e.what());
    }
  }

  ConfigReader child(const std::string &key) {
    used_.insert(key);
    if (!obj_.contains(key))
      throw ConfigError(field(key), "missing required key");
    return ConfigReader(obj_.at(key), field(key));
  }

  const Json &raw(const std::string &key) {
    used_.insert(key);
    return obj_.at(key);
  }

  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it)
      if (!used_.count(it.key()))
        throw ConfigError(field(it.key()), "unknown key");
  }

  std::string field(const std::string &key) const { return path_.empty() ? key : path_ + "." + key; }

private:
  template <class T> void check_type(const std::string &key, const Json &v) const {
    bool ok = true;
    if constexpr (std::is_same_v<T, bool>)
      ok = v.is_boolean();
    else if constexpr (std::is_integral_v<T>)
      ok = v.is_number_integer() &&
           (std::is_signed_v<T> || v.is_number_unsigned() || v.get<std::int64_t>() >= 0);
    else if constexpr (std::is_floating_point_v<T>)
      ok = v.is_number();
    else if constexpr (std::is_same_v<T, std::string>)
      ok = v.is_string();
    else
      ok = v.is_array();
    if (!ok)
      throw ConfigError(field(key), "wrong type (found " + std::string(v.type_name()) + ")");
  }

  const Json &obj_;
  std::string path_;
  std::set<std::string> used_;
};

/// Reads an experiment spec; keys absent from the object keep the preset of
/// the named experiment.
inline ExperimentSpec spec_from_json(ConfigReader &r, bool paper_scale = false) {
  const std::string name = r.required<std::string>("experiment");
  ExperimentName kind;
  try {
    kind = experiment_name_from_string(name);
  } catch (const InvalidInput &e) {
    throw ConfigError(r.field("experiment"), e.what());
  }
  ExperimentSpec s = paper_scale && kind == ExperimentName::timing ? ExperimentSpec::paper_scale_timing()
                                                                   : ExperimentSpec::preset(kind);
  s.m = r.get<Index>("m", s.m);
  s.n = r.get<Index>("n", s.n);
  s.s = r.get<Index>("s", s.s);
  s.q = r.get<double>("q", s.q);
  s.noise_level = r.get<double>("noise_level", s.noise_level);
  try {
    s.ensemble = ensemble_kind_from_string(r.get<std::string>("ensemble", to_string(s.ensemble)));
  } catch (const ConfigError &) {
    throw;
  } catch (const InvalidInput &e) {
    throw ConfigError(r.field("ensemble"), e.what());
  }
  try {
    s.entry_law = entry_law_from_string(r.get<std::string>("entry_law", to_string(s.entry_law)));
  } catch (const ConfigError &) {
    throw;
  } catch (const InvalidInput &e) {
    throw ConfigError(r.field("entry_law"), e.what());
  }
  s.betas = r.get<std::vector<double>>("betas", s.betas);
  s.ms = r.get<std::vector<Index>>("ms", s.ms);
  s.trials = r.get<Index>("trials", s.trials);
  s.seed = r.get<std::uint64_t>("seed", s.seed);
  s.beta = r.get<double>("beta", s.beta);
  s.alpha = r.get<double>("alpha", s.alpha);
  s.mu = r.get<double>("mu", s.mu);
  s.target_support = r.get<Index>("target_support", s.target_support);
  s.err_target = r.get<double>("err_target", s.err_target);
  s.tail_fraction = r.get<double>("tail_fraction", s.tail_fraction);
  s.iterations = r.get<Index>("iterations", s.iterations);
  s.timing_repeats = r.get<Index>("timing_repeats", s.timing_repeats);
  s.max_iters = r.get<Index>("max_iters", s.max_iters);
  s.stop_tol = r.get<double>("stop_tol", s.stop_tol);
  s.inner_tol = r.get<double>("inner_tol", s.inner_tol);
  for (double b : s.betas)
    if (!(b > 0.0))
      throw ConfigError(r.field("betas"), "entries must be positive");
  if (!(s.beta > 0.0))
    throw ConfigError(r.field("beta"), "must be positive");
  if (!(s.tail_fraction > 0.0 && s.tail_fraction <= 1.0))
    throw ConfigError(r.field("tail_fraction"), "must lie in (0, 1]");
  try {
    s.validate();
  } catch (const InvalidInput &e) {
    throw ConfigError(r.field("experiment"), e.what());
  }
  return s;
}

inline Json table_summary_json(const std::map<std::string, double> &findings) {
  Json j = Json::object();
  for (const auto &[k, v] : findings)
    j[k] = finite_or_null(v);
  return j;
}

} // namespace foldsolve
