//
// cslme - Copyright 2026 The cslme Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "cslme/cli.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <memory>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "cslme/baseline.hpp"
#include "cslme/ranef.hpp"
#include "cslme/rng.hpp"
#include "cslme/sim.hpp"

namespace cslme {

using nlohmann::json;

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    const auto piece = trim(s.substr(start, comma == std::string_view::npos
                                                ? std::string_view::npos
                                                : comma - start));
    if (!piece.empty()) out.push_back(piece);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::optional<double> to_double(std::string_view text) {
  const std::string t = trim(text);
  if (t.empty()) return std::nullopt;
  double v = 0.0;
  const char* first = t.data();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, t.data() + t.size(), v);
  if (ec != std::errc{} || ptr != t.data() + t.size() || !std::isfinite(v))
    return std::nullopt;
  return v;
}

double config_double(const std::string& key, const std::string& value) {
  const auto v = to_double(value);
  if (!v) throw ConfigError("'" + key + "': expected a number, got '" + value + "'");
  return *v;
}

long long config_int(const std::string& key, const std::string& value) {
  const std::string t = trim(value);
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc{} || ptr != t.data() + t.size())
    throw ConfigError("'" + key + "': expected an integer, got '" + value + "'");
  return v;
}

std::uint64_t config_seed(const std::string& key, const std::string& value) {
  const std::string t = trim(value);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc{} || ptr != t.data() + t.size())
    throw ConfigError("'" + key + "': expected a nonnegative integer seed");
  return v;
}

bool config_bool(const std::string& key, const std::string& value) {
  const auto v = lower(trim(value));
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("'" + key + "': expected true/false, got '" + value + "'");
}

VectorXd config_vector(const std::string& key, const std::string& value) {
  const auto parts = split_list(value);
  VectorXd v(static_cast<Index>(parts.size()));
  for (std::size_t i = 0; i < parts.size(); ++i)
    v[static_cast<Index>(i)] = config_double(key, parts[i]);
  return v;
}

std::string fmt17(double v) {
  if (std::isnan(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt3(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  // Avoid "-0.000" in presentation tables.
  if (std::string(buf) == "-0.000") return "0.000";
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::vector<double> to_vec(const VectorXd& v) { return {v.data(), v.data() + v.size()}; }

bool is_intercept_name(const std::string& s) {
  const auto l = lower(s);
  return l == "(intercept)" || l == "intercept";
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path + "'");
  return in;
}

}  // namespace

std::vector<CsvRecord> read_csv(std::istream& in) {
  std::vector<CsvRecord> records;
  std::string field;
  CsvRecord rec;
  std::size_t line = 1;
  rec.line = 1;
  bool in_quotes = false;
  bool quoted_field = false;
  bool any = false;  // current record has content
  auto end_field = [&] {
    rec.fields.push_back(std::move(field));
    field.clear();
    quoted_field = false;
  };
  auto end_record = [&] {
    end_field();
    const bool blank = rec.fields.size() == 1 && rec.fields[0].empty() && !any;
    if (!blank) records.push_back(std::move(rec));
    rec = CsvRecord{};
    rec.line = line;
    any = false;
  };

  char c;
  while (in.get(c)) {
    if (in_quotes) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field += '"';
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!field.empty() || quoted_field)
          throw ParseError("line " + std::to_string(line) +
                           ": quote inside an unquoted field");
        in_quotes = true;
        quoted_field = true;
        any = true;
        break;
      case ',':
        any = true;
        end_field();
        break;
      case '\r':
        if (in.peek() == '\n') in.get(c);
        ++line;
        end_record();
        break;
      case '\n':
        ++line;
        end_record();
        break;
      default:
        if (quoted_field)
          throw ParseError("line " + std::to_string(line) +
                           ": characters after a closing quote");
        any = true;
        field += c;
    }
  }
  if (in_quotes)
    throw ParseError("line " + std::to_string(rec.line) + ": unterminated quoted field");
  if (any || !field.empty()) end_record();
  return records;
}

Ingested ingest(std::istream& in, const InputSchema& schema) {
  const auto records = read_csv(in);
  if (records.empty()) throw ParseError("input is empty (a header row is required)");
  const auto& header = records.front().fields;

  std::unordered_map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) {
    const std::string name = trim(header[i]);
    if (!col.emplace(name, i).second)
      throw ParseError("line 1: duplicate header '" + name + "'");
  }
  auto find = [&](const std::string& name) {
    const auto it = col.find(name);
    if (it == col.end()) throw ParseError("unknown column '" + name + "'");
    return it->second;
  };
  if (schema.group_column.empty() || schema.response_column.empty())
    throw ConfigError("group and response columns are required");
  const std::size_t gcol = find(schema.group_column);
  const std::size_t ycol = find(schema.response_column);
  std::vector<std::size_t> fcols;
  for (const auto& f : schema.feature_columns) fcols.push_back(find(f));

  Ingested out;
  if (schema.intercept) out.data.feature_names.push_back("(Intercept)");
  for (const auto& f : schema.feature_columns) out.data.feature_names.push_back(f);
  const Index p = static_cast<Index>(out.data.feature_names.size());
  if (p == 0) throw ConfigError("the model has no columns (no features, no intercept)");

  std::vector<std::vector<double>> ys;
  std::vector<std::vector<double>> xs;
  std::unordered_map<std::string, std::size_t> group_index;
  std::vector<std::string> labels;

  auto numeric = [&](const CsvRecord& rec, std::size_t c) {
    const auto v = to_double(rec.fields[c]);
    const std::string where =
        "line " + std::to_string(rec.line) + ", column '" + trim(header[c]) + "'";
    if (!v) {
      if (trim(rec.fields[c]).empty()) throw ParseError(where + ": missing value");
      throw ParseError(where + ": non-numeric value '" + rec.fields[c] + "'");
    }
    return *v;
  };

  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.fields.size() != header.size())
      throw ParseError("line " + std::to_string(rec.line) + ": expected " +
                       std::to_string(header.size()) + " fields, found " +
                       std::to_string(rec.fields.size()));
    const std::string label = trim(rec.fields[gcol]);
    if (label.empty())
      throw ParseError("line " + std::to_string(rec.line) + ", column '" +
                       schema.group_column + "': missing group label");
    const double y = numeric(rec, ycol);
    auto [it, fresh] = group_index.emplace(label, labels.size());
    if (fresh) {
      labels.push_back(label);
      ys.emplace_back();
      xs.emplace_back();
    }
    ys[it->second].push_back(y);
    auto& xrow = xs[it->second];
    if (schema.intercept) xrow.push_back(1.0);
    for (const std::size_t c : fcols) xrow.push_back(numeric(rec, c));
  }

  for (std::size_t l = 0; l < labels.size(); ++l) {
    GroupData grp;
    grp.label = labels[l];
    const auto m = static_cast<Index>(ys[l].size());
    grp.y = Eigen::Map<const VectorXd>(ys[l].data(), m);
    grp.X = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                           Eigen::RowMajor>>(xs[l].data(), m, p);
    out.data.groups.push_back(std::move(grp));
  }

  out.spec.intercept = schema.intercept;
  std::vector<std::string> re = schema.random_effect_columns;
  if (re.empty()) {
    if (!schema.intercept) throw ConfigError("random-effect columns are required without an intercept");
    re = {"(Intercept)"};
  }
  for (const auto& name : re) {
    Index idx = -1;
    if (is_intercept_name(name)) {
      if (!schema.intercept)
        throw ConfigError("random intercept requested but the intercept is disabled");
      idx = 0;
    } else {
      const auto it = std::find(schema.feature_columns.begin(),
                                schema.feature_columns.end(), name);
      if (it == schema.feature_columns.end())
        throw ConfigError("random-effect column '" + name + "' is not a feature");
      idx = static_cast<Index>(it - schema.feature_columns.begin()) + (schema.intercept ? 1 : 0);
    }
    out.spec.alpha.push_back(idx);
  }
  std::sort(out.spec.alpha.begin(), out.spec.alpha.end());
  if (std::adjacent_find(out.spec.alpha.begin(), out.spec.alpha.end()) != out.spec.alpha.end())
    throw ConfigError("random-effect columns listed twice");

  out.data.validate_for_fit();
  out.spec.validate(p);
  return out;
}

Ingested ingest_file(const std::string& path, const InputSchema& schema) {
  auto in = open_input(path);
  return ingest(in, schema);
}

KeyValues parse_kv(std::istream& in) {
  KeyValues kv;
  std::string line;
  for (std::size_t no = 1; std::getline(in, line); ++no) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(no) + ": expected 'key = value'");
    const std::string key = trim(t.substr(0, eq));
    if (key.empty()) throw ConfigError("config line " + std::to_string(no) + ": empty key");
    if (!kv.emplace(key, trim(t.substr(eq + 1))).second)
      throw ConfigError("config line " + std::to_string(no) + ": duplicate key '" + key + "'");
  }
  return kv;
}

KeyValues parse_kv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  return parse_kv(in);
}

std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t h) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t data_fingerprint(const Dataset& data) {
  std::uint64_t h = fnv1a(nullptr, 0);
  for (const auto& name : data.feature_names) h = fnv1a(name.data(), name.size() + 1, h);
  for (const auto& grp : data.groups) {
    h = fnv1a(grp.label.data(), grp.label.size() + 1, h);
    const Index dims[2] = {grp.X.rows(), grp.X.cols()};
    h = fnv1a(dims, sizeof dims, h);
    h = fnv1a(grp.y.data(), sizeof(double) * static_cast<std::size_t>(grp.y.size()), h);
    h = fnv1a(grp.X.data(), sizeof(double) * static_cast<std::size_t>(grp.X.size()), h);
  }
  return h;
}

namespace {

std::string canonical_config(const InputSchema& schema, const RunConfig& cfg) {
  std::ostringstream os;
  os << "method=" << to_string(cfg.method) << ";starts=" << cfg.fit.n_starts
     << ";seed=" << cfg.fit.seed << ";max_iter=" << cfg.fit.max_iter
     << ";tol_obj=" << fmt17(cfg.fit.tol_obj) << ";tol_grad=" << fmt17(cfg.fit.tol_grad)
     << ";pit_q=" << cfg.pit_q << ";constrained=" << cfg.constrained
     << ";group=" << schema.group_column << ";response=" << schema.response_column
     << ";intercept=" << schema.intercept << ";features=";
  for (const auto& f : schema.feature_columns) os << f << '|';
  os << ";random=";
  for (const auto& f : schema.random_effect_columns) os << f << '|';
  return os.str();
}

std::vector<std::string> re_names(const Dataset& data, const ModelSpec& spec) {
  std::vector<std::string> out;
  for (const Index a : spec.alpha) out.push_back(data.feature_name(a));
  return out;
}

// Everything the fit and ranef commands report about a fitted model.
struct Fitted {
  Parameters params;
  MatrixXd gamma;
  MatrixXd overall;
  std::vector<bool> boundary;
  VectorXd s_gamma;
  double objective = 0.0;
  std::string objective_kind;
  double r2_marginal = 0.0;
  double r2_conditional = 0.0;
  bool converged = false;
  json diagnostics;
};

// gamma for a stored parameter set; the same path cmd_fit used.
void random_effects_for(Method method, const Design& design, Fitted& f) {
  if (method == Method::kMl || method == Method::kReml) {
    const Theta th{f.params.varsigma, f.params.sigma};
    f.gamma = blup(th, f.params.beta, design).gamma;
    f.overall = f.gamma;
    for (Index i = 0; i < design.k(); ++i)
      f.overall.col(i).array() += f.params.beta[design.alpha()[static_cast<std::size_t>(i)]];
    f.boundary.assign(static_cast<std::size_t>(design.g()), false);
  } else {
    auto re = solve_all(design, f.params);
    f.gamma = std::move(re.effects.gamma);
    f.overall = std::move(re.overall);
    f.boundary = std::move(re.boundary);
  }
}

Fitted run_fit(const Design& design, const RunConfig& cfg) {
  Fitted f;
  const Index k = design.k();
  f.s_gamma.resize(k);
  switch (cfg.method) {
    case Method::kPls:
    case Method::kPrls: {
      FitConfig fc = cfg.fit;
      fc.method = cfg.method;
      const FitResult r = fit(design, fc);
      f.params = r.params;
      f.objective = r.objective;
      f.objective_kind = to_string(cfg.method) + " objective (minimized)";
      f.converged = r.converged;
      json starts = json::array();
      for (const auto& s : r.starts)
        starts.push_back({{"index", s.index},
                          {"objective", s.failed ? json(nullptr) : json(s.objective)},
                          {"converged", s.converged},
                          {"iterations", s.iterations},
                          {"stop_reason", s.stop_reason},
                          {"error", s.error}});
      f.diagnostics = {{"converged", r.converged},
                       {"iterations", r.iterations},
                       {"start_index", r.start_index},
                       {"stop_reason", r.stop_reason},
                       {"projected_gradient", r.projected_gradient},
                       {"objective_trace", r.objective_trace},
                       {"starts", starts}};
      break;
    }
    case Method::kMl:
    case Method::kReml: {
      BaselineConfig bc;
      bc.n_starts = cfg.fit.n_starts;
      bc.max_iter = cfg.fit.max_iter;
      bc.tol_obj = cfg.fit.tol_obj;
      bc.tol_grad = cfg.fit.tol_grad;
      bc.seed = cfg.fit.seed;
      const BaselineFit b = fit_unconstrained(
          design, cfg.method == Method::kMl ? Criterion::kMl : Criterion::kReml, bc);
      f.params = b.params();
      f.objective = b.loglik;
      f.objective_kind = to_string(cfg.method) + " log-likelihood (maximized, no 2pi constant)";
      f.converged = b.converged;
      f.diagnostics = {{"converged", b.converged},
                       {"iterations", b.iterations},
                       {"stop_reason", b.stop_reason},
                       {"objective_trace", b.trace}};
      break;
    }
    case Method::kPit: {
      const Parameters init = initial_points(design, 1, cfg.fit.seed).front();
      OptimOptions opts{cfg.fit.max_iter, cfg.fit.tol_obj, cfg.fit.tol_grad};
      const BaselineFit b = fit_pit(design, cfg.pit_q, init, opts);
      f.params = b.params();
      f.objective = -b.loglik;
      f.objective_kind = "PIT negative log quadrature likelihood (minimized)";
      f.converged = b.converged;
      f.diagnostics = {{"converged", b.converged},
                       {"iterations", b.iterations},
                       {"stop_reason", b.stop_reason},
                       {"pit_q", cfg.pit_q},
                       {"objective_trace", b.trace}};
      break;
    }
  }
  random_effects_for(cfg.method, design, f);
  for (Index i = 0; i < k; ++i) {
    const double b = f.params.beta[design.alpha()[static_cast<std::size_t>(i)]];
    const double s = f.params.varsigma[i];
    f.s_gamma[i] = (cfg.method == Method::kMl || cfg.method == Method::kReml)
                       ? s
                       : std::sqrt(random_effect_variance(b, s));
  }
  const R2 r2 = r_squared(design, f.params, cfg.fit.r2_mode);
  f.r2_marginal = r2.marginal;
  f.r2_conditional = r2.conditional;
  return f;
}

json group_rows(const Design& design, const Fitted& f) {
  json groups = json::array();
  for (Index l = 0; l < design.g(); ++l) {
    groups.push_back({{"label", design.data().groups[static_cast<std::size_t>(l)].label},
                      {"gamma", to_vec(f.gamma.row(l).transpose())},
                      {"overall", to_vec(f.overall.row(l).transpose())},
                      {"boundary", static_cast<bool>(f.boundary[static_cast<std::size_t>(l)])}});
  }
  return groups;
}

void write_group_csv(std::ostream& out, const Design& design, const Fitted& f) {
  const auto names = re_names(design.data(), design.spec());
  out << "group,coefficient,gamma,overall,overall_rounded,boundary\n";
  for (Index l = 0; l < design.g(); ++l)
    for (Index i = 0; i < design.k(); ++i)
      out << csv_field(design.data().groups[static_cast<std::size_t>(l)].label) << ','
          << csv_field(names[static_cast<std::size_t>(i)]) << ',' << fmt17(f.gamma(l, i))
          << ',' << fmt17(f.overall(l, i)) << ',' << fmt3(f.overall(l, i)) << ','
          << (f.boundary[static_cast<std::size_t>(l)] ? "true" : "false") << '\n';
}

}  // namespace

int cmd_fit(const std::string& data_path, const InputSchema& schema,
            const RunConfig& config, std::ostream& out, std::ostream& err) {
  std::unique_ptr<Design> design;
  try {
    if (config.format != "json" && config.format != "csv")
      throw ConfigError("format must be json or csv");
    if (config.pit_q != 2 && config.pit_q != 4) throw ConfigError("--pit-q must be 2 or 4");
    Ingested ing = ingest_file(data_path, schema);
    ing.spec.constrained = config.constrained;
    design = std::make_unique<Design>(std::move(ing.data), std::move(ing.spec));
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  }

  Fitted f;
  try {
    f = run_fit(*design, config);
  } catch (const ConvergenceError& e) {
    err << "error: " << e.what() << '\n';
    return kExitNotConverged;
  } catch (const UnderflowError& e) {
    err << "error: " << e.what() << '\n';
    return kExitNotConverged;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitNotConverged;
  }

  const auto& data = design->data();
  const auto names = re_names(data, design->spec());
  if (config.format == "json") {
    json beta = json::array();
    for (Index j = 0; j < design->p(); ++j) beta.push_back(data.feature_name(j));
    json doc;
    doc["spec"] = {{"method", to_string(config.method)},
                   {"group_column", schema.group_column},
                   {"response_column", schema.response_column},
                   {"feature_names", data.feature_names},
                   {"random_effects", names},
                   {"alpha", design->spec().alpha},
                   {"intercept", schema.intercept},
                   {"constrained", config.constrained},
                   {"n", design->n()},
                   {"g", design->g()}};
    doc["parameters"] = {{"names", data.feature_names},
                         {"beta", to_vec(f.params.beta)},
                         {"varsigma", to_vec(f.params.varsigma)},
                         {"sigma", f.params.sigma},
                         {"s_gamma", to_vec(f.s_gamma)}};
    doc["random_effects"] = {{"columns", names}, {"groups", group_rows(*design, f)}};
    doc["metrics"] = {{"objective", f.objective},
                      {"objective_kind", f.objective_kind},
                      {"r2_marginal", f.r2_marginal},
                      {"r2_conditional", f.r2_conditional},
                      {"r2_mode", config.fit.r2_mode == R2Mode::kRaw ? "raw" : "effective"}};
    doc["diagnostics"] = f.diagnostics;
    const std::string canon = canonical_config(schema, config);
    doc["provenance"] = {{"seed", config.fit.seed},
                         {"version", kVersion},
                         {"config_hash", hex64(fnv1a(canon.data(), canon.size()))},
                         {"data_fingerprint", hex64(data_fingerprint(data))},
                         {"data_path", data_path}};
    out << doc.dump(2) << '\n';
  } else {
    out << "kind,name,value,rounded\n";
    for (Index j = 0; j < design->p(); ++j)
      out << "beta," << csv_field(data.feature_name(j)) << ',' << fmt17(f.params.beta[j])
          << ',' << fmt3(f.params.beta[j]) << '\n';
    for (Index i = 0; i < design->k(); ++i) {
      const auto& nm = csv_field(names[static_cast<std::size_t>(i)]);
      out << "varsigma," << nm << ',' << fmt17(f.params.varsigma[i]) << ','
          << fmt3(f.params.varsigma[i]) << '\n';
      out << "s_gamma," << nm << ',' << fmt17(f.s_gamma[i]) << ',' << fmt3(f.s_gamma[i]) << '\n';
    }
    out << "sigma,sigma," << fmt17(f.params.sigma) << ',' << fmt3(f.params.sigma) << '\n';
    out << "metric,objective," << fmt17(f.objective) << ',' << fmt3(f.objective) << '\n';
    out << "metric,r2_marginal," << fmt17(f.r2_marginal) << ',' << fmt3(f.r2_marginal) << '\n';
    out << "metric,r2_conditional," << fmt17(f.r2_conditional) << ','
        << fmt3(f.r2_conditional) << '\n';
    out << "metric,converged," << (f.converged ? 1 : 0) << ',' << (f.converged ? 1 : 0) << '\n';
    for (Index l = 0; l < design->g(); ++l)
      for (Index i = 0; i < design->k(); ++i)
        out << "overall," << csv_field(data.groups[static_cast<std::size_t>(l)].label + ":" +
                                       names[static_cast<std::size_t>(i)])
            << ',' << fmt17(f.overall(l, i)) << ',' << fmt3(f.overall(l, i)) << '\n';
  }
  if (!f.converged) {
    err << "warning: optimizer did not converge (" << f.diagnostics.value("stop_reason", "")
        << ")\n";
    return kExitNotConverged;
  }
  return kExitOk;
}

namespace {

const std::vector<std::string> kSimulateKeys = {
    "scenario", "name", "n", "p", "g", "intercept", "alpha", "beta", "varsigma", "sigma",
    "replications", "seed", "gamma_scale", "methods", "pit_q", "starts", "threads",
    "r2_mode", "format"};

void check_keys(const KeyValues& kv, const std::vector<std::string>& allowed) {
  for (const auto& [key, value] : kv)
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw ConfigError("unknown config key '" + key + "'");
}

Scenario scenario_from(const KeyValues& kv) {
  Scenario sc;
  if (const auto it = kv.find("scenario"); it != kv.end()) sc = builtin_scenario(it->second);
  for (const auto& [key, value] : kv) {
    if (key == "name") sc.name = value;
    else if (key == "n") sc.n = static_cast<Index>(config_int(key, value));
    else if (key == "p") sc.p = static_cast<Index>(config_int(key, value));
    else if (key == "g") sc.g = static_cast<Index>(config_int(key, value));
    else if (key == "intercept") sc.intercept = config_bool(key, value);
    else if (key == "alpha") {
      sc.alpha.clear();
      for (const auto& part : split_list(value))
        sc.alpha.push_back(static_cast<Index>(config_int(key, part)));
    } else if (key == "beta") sc.truth.beta = config_vector(key, value);
    else if (key == "varsigma") sc.truth.varsigma = config_vector(key, value);
    else if (key == "sigma") sc.truth.sigma = config_double(key, value);
    else if (key == "replications") sc.replications = static_cast<int>(config_int(key, value));
    else if (key == "seed") sc.seed = config_seed(key, value);
    else if (key == "gamma_scale") sc.gamma_scale = config_double(key, value);
  }
  sc.validate();
  return sc;
}

}  // namespace

int cmd_simulate(const std::string& config_path,
                 const std::optional<std::string>& format, int threads,
                 std::ostream& out, std::ostream& err) {
  Scenario sc;
  std::vector<Method> methods{Method::kPls, Method::kPrls, Method::kReml};
  SimOptions opts;
  opts.threads = threads;
  std::string fmt = "csv";
  try {
    const KeyValues kv = parse_kv_file(config_path);
    check_keys(kv, kSimulateKeys);
    sc = scenario_from(kv);
    if (const auto it = kv.find("methods"); it != kv.end()) {
      methods.clear();
      for (const auto& m : split_list(it->second)) methods.push_back(parse_method(m));
      if (methods.empty()) throw ConfigError("methods must not be empty");
    }
    if (const auto it = kv.find("pit_q"); it != kv.end())
      opts.pit_q = static_cast<int>(config_int("pit_q", it->second));
    if (const auto it = kv.find("starts"); it != kv.end())
      opts.n_starts = static_cast<int>(config_int("starts", it->second));
    if (const auto it = kv.find("threads"); it != kv.end() && threads == 0)
      opts.threads = static_cast<int>(config_int("threads", it->second));
    if (const auto it = kv.find("r2_mode"); it != kv.end()) {
      const auto m = lower(it->second);
      if (m == "raw") opts.r2_mode = R2Mode::kRaw;
      else if (m == "effective") opts.r2_mode = R2Mode::kEffective;
      else throw ConfigError("r2_mode must be raw or effective");
    }
    if (const auto it = kv.find("format"); it != kv.end()) fmt = it->second;
    if (format) fmt = *format;
    if (fmt != "csv" && fmt != "json") throw ConfigError("format must be csv or json");
    if (opts.pit_q != 2 && opts.pit_q != 4) throw ConfigError("pit_q must be 2 or 4");
    if (opts.n_starts < 1) throw ConfigError("starts must be >= 1");
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  }

  // Resolved configuration, including every derived replication seed.
  err << "# resolved configuration\n# scenario = " << sc.name << "\n# n = " << sc.n
      << "\n# p = " << sc.p << "\n# g = " << sc.g << "\n# intercept = " << sc.intercept
      << "\n# alpha =";
  for (const Index a : sc.alpha) err << ' ' << a;
  err << "\n# beta =";
  for (Index j = 0; j < sc.truth.beta.size(); ++j) err << ' ' << fmt17(sc.truth.beta[j]);
  err << "\n# varsigma =";
  for (Index i = 0; i < sc.truth.varsigma.size(); ++i) err << ' ' << fmt17(sc.truth.varsigma[i]);
  err << "\n# sigma = " << fmt17(sc.truth.sigma) << "\n# replications = " << sc.replications
      << "\n# seed = " << sc.seed << "\n# gamma_scale = " << fmt17(sc.gamma_scale)
      << "\n# methods =";
  for (const auto m : methods) err << ' ' << to_string(m);
  err << "\n# pit_q = " << opts.pit_q << "\n# starts = " << opts.n_starts
      << "\n# replication_seeds =";
  for (int r = 0; r < sc.replications; ++r)
    err << ' ' << derive_seed(sc.seed, static_cast<std::uint64_t>(r));
  err << '\n';

  ScenarioReport report;
  try {
    report = run_scenario(sc, methods, opts);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitNotConverged;
  }

  if (fmt == "csv") {
    write_summary_csv(out, report);
  } else {
    json rows = json::array();
    for (const auto& row : report.summary)
      rows.push_back({{"method", row.method},
                      {"quantity", row.quantity},
                      {"truth", std::isnan(row.truth) ? json(nullptr) : json(row.truth)},
                      {"mean", std::isnan(row.mean) ? json(nullptr) : json(row.mean)},
                      {"median", std::isnan(row.median) ? json(nullptr) : json(row.median)},
                      {"sd", std::isnan(row.sd) ? json(nullptr) : json(row.sd)},
                      {"count", row.count}});
    out << json{{"scenario", sc.name}, {"n", sc.n}, {"seed", sc.seed},
                {"replications", sc.replications}, {"summary", rows}}
               .dump(2)
        << '\n';
  }
  int failures = 0;
  for (const auto& rec : report.records) failures += rec.ok ? 0 : 1;
  if (failures > 0) err << "# failed fits: " << failures << '\n';
  return kExitOk;
}

int cmd_contour(const std::string& request_path,
                const std::optional<std::string>& data_path,
                const InputSchema& schema, std::ostream& out,
                std::ostream* sidecar, std::ostream& err) {
  std::unique_ptr<Design> design;
  ContourRequest req;
  std::vector<double> levels;
  double band = 0.0;
  try {
    const KeyValues kv = parse_kv_file(request_path);
    check_keys(kv, {"objective", "vary", "x_range", "y_range", "scenario", "seed",
                    "fixed.beta", "fixed.varsigma", "fixed.sigma", "levels", "level_band"});
    if (const auto it = kv.find("objective"); it != kv.end())
      req.objective = parse_method(it->second);
    if (const auto it = kv.find("vary"); it != kv.end()) {
      const auto v = split_list(it->second);
      if (v.size() != 2) throw ConfigError("vary needs exactly two parameter labels");
      req.vary = {v[0], v[1]};
    }
    auto axis = [&](const char* key) {
      const auto it = kv.find(key);
      if (it == kv.end()) throw ConfigError(std::string("missing ") + key);
      const auto parts = split_list(it->second);
      if (parts.size() != 3) throw ConfigError(std::string(key) + " needs lo, hi, steps");
      return Axis{config_double(key, parts[0]), config_double(key, parts[1]),
                  static_cast<int>(config_int(key, parts[2]))};
    };
    req.ranges = {axis("x_range"), axis("y_range")};

    if (data_path) {
      Ingested ing = ingest_file(*data_path, schema);
      design = std::make_unique<Design>(std::move(ing.data), std::move(ing.spec));
    } else {
      const auto it = kv.find("scenario");
      if (it == kv.end()) throw ConfigError("contour needs a data file or a scenario");
      Scenario sc = builtin_scenario(it->second);
      if (const auto s = kv.find("seed"); s != kv.end()) sc.seed = config_seed("seed", s->second);
      const std::uint64_t rep_seed = derive_seed(sc.seed, 0);
      auto gen = gen_response(gen_design(sc, derive_seed(rep_seed, 0)), sc.truth, sc.spec(),
                              derive_seed(rep_seed, 1));
      design = std::make_unique<Design>(std::move(gen.data), sc.spec());
      req.fixed = sc.truth;
    }
    if (const auto it = kv.find("fixed.beta"); it != kv.end())
      req.fixed.beta = config_vector("fixed.beta", it->second);
    if (const auto it = kv.find("fixed.varsigma"); it != kv.end())
      req.fixed.varsigma = config_vector("fixed.varsigma", it->second);
    if (const auto it = kv.find("fixed.sigma"); it != kv.end())
      req.fixed.sigma = config_double("fixed.sigma", it->second);
    if (const auto it = kv.find("levels"); it != kv.end())
      levels = to_vec(config_vector("levels", it->second));
    if (const auto it = kv.find("level_band"); it != kv.end())
      band = config_double("level_band", it->second);
    else if (!levels.empty())
      band = 1e-3;
    req.validate(design->p(), design->k());
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  }

  const auto cells = contour_grid(req, *design);
  out << req.vary[0] << ',' << req.vary[1] << ",objective\n";
  for (const auto& c : cells)
    out << fmt17(c.x) << ',' << fmt17(c.y) << ',' << fmt17(c.value) << '\n';
  if (sidecar && !levels.empty()) {
    *sidecar << req.vary[0] << ',' << req.vary[1] << ",objective,level\n";
    for (const auto& c : cells_near_levels(cells, levels, band)) {
      double nearest = levels.front();
      for (const double lv : levels)
        if (std::abs(c.value - lv) < std::abs(c.value - nearest)) nearest = lv;
      *sidecar << fmt17(c.x) << ',' << fmt17(c.y) << ',' << fmt17(c.value) << ','
               << fmt17(nearest) << '\n';
    }
  }
  return kExitOk;
}

int cmd_ranef(const std::string& data_path, const InputSchema& schema,
              const std::string& fit_document_path, const std::string& format,
              std::ostream& out, std::ostream& err) {
  std::unique_ptr<Design> design;
  Fitted f;
  Method method = Method::kPls;
  try {
    if (format != "json" && format != "csv") throw ConfigError("format must be json or csv");
    json doc;
    {
      std::ifstream in(fit_document_path);
      if (!in) throw ConfigError("cannot open fit document '" + fit_document_path + "'");
      try {
        doc = json::parse(in);
      } catch (const json::exception& e) {
        throw ParseError(std::string("fit document: ") + e.what());
      }
    }
    try {
      method = parse_method(doc.at("spec").at("method").get<std::string>());
      Ingested ing = ingest_file(data_path, schema);
      ing.spec.constrained = doc.at("spec").at("constrained").get<bool>();
      const auto fp = hex64(data_fingerprint(ing.data));
      if (doc.at("provenance").at("data_fingerprint").get<std::string>() != fp)
        throw ConfigError("fit document was produced from different data");
      const auto beta = doc.at("parameters").at("beta").get<std::vector<double>>();
      const auto vs = doc.at("parameters").at("varsigma").get<std::vector<double>>();
      const auto alpha = doc.at("spec").at("alpha").get<std::vector<Index>>();
      if (static_cast<Index>(beta.size()) != ing.data.p())
        throw ConfigError("fit document has " + std::to_string(beta.size()) +
                          " fixed effects, the data has " + std::to_string(ing.data.p()));
      if (static_cast<Index>(vs.size()) != ing.spec.k() || alpha != ing.spec.alpha)
        throw ConfigError("fit document random effects (k = " + std::to_string(vs.size()) +
                          ") do not match the schema (k = " + std::to_string(ing.spec.k()) + ")");
      f.params.beta = Eigen::Map<const VectorXd>(beta.data(), static_cast<Index>(beta.size()));
      f.params.varsigma = Eigen::Map<const VectorXd>(vs.data(), static_cast<Index>(vs.size()));
      f.params.sigma = doc.at("parameters").at("sigma").get<double>();
      design = std::make_unique<Design>(std::move(ing.data), std::move(ing.spec));
    } catch (const json::exception& e) {
      throw ConfigError(std::string("fit document is missing fields: ") + e.what());
    }
    random_effects_for(method, *design, f);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  }

  if (format == "csv") {
    write_group_csv(out, *design, f);
  } else {
    out << json{{"method", to_string(method)},
                {"columns", re_names(design->data(), design->spec())},
                {"groups", group_rows(*design, f)}}
               .dump(2)
        << '\n';
  }
  return kExitOk;
}

}  // namespace cslme
