#include "quench/cli.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "quench/error.hpp"

namespace quench {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

// ---------------------------------------------------------------- numbers

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text, std::string_view key) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (!text.empty() && *first == '+') ++first;
  const auto res = std::from_chars(first, last, v);
  if (text.empty() || res.ec != std::errc() || res.ptr != last) {
    throw ConfigError("bad number '" + std::string(text) + "'" + (key.empty() ? "" : " for " + std::string(key)));
  }
  return v;
}

namespace {

template <class Int>
Int parse_integer(std::string_view text, std::string_view key) {
  Int v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw ConfigError("bad integer '" + std::string(text) + "' for " + std::string(key));
  }
  return v;
}

bool parse_bool(std::string_view text, std::string_view key) {
  if (text == "true") return true;
  if (text == "false") return false;
  throw ConfigError("bad boolean '" + std::string(text) + "' for " + std::string(key) + " (true or false)");
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

// ---------------------------------------------------------------- config table

struct Field {
  std::string name;
  std::string doc;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, std::string_view)> set;
};

template <class Access>
Field real_field(std::string name, std::string doc, Access access) {
  Field f{name, std::move(doc), {}, {}};
  f.get = [access](const RunConfig& c) { return format_double(access(const_cast<RunConfig&>(c))); };
  f.set = [access, name](RunConfig& c, std::string_view v) { access(c) = parse_double(v, name); };
  return f;
}

template <class Int, class Access>
Field integer_field(std::string name, std::string doc, Access access) {
  Field f{name, std::move(doc), {}, {}};
  f.get = [access](const RunConfig& c) { return std::to_string(access(const_cast<RunConfig&>(c))); };
  f.set = [access, name](RunConfig& c, std::string_view v) { access(c) = parse_integer<Int>(v, name); };
  return f;
}

template <class Access>
Field bool_field(std::string name, std::string doc, Access access) {
  Field f{name, std::move(doc), {}, {}};
  f.get = [access](const RunConfig& c) { return std::string(access(const_cast<RunConfig&>(c)) ? "true" : "false"); };
  f.set = [access, name](RunConfig& c, std::string_view v) { access(c) = parse_bool(v, name); };
  return f;
}

template <class Access>
Field text_field(std::string name, std::string doc, Access access) {
  Field f{name, std::move(doc), {}, {}};
  f.get = [access](const RunConfig& c) { return access(const_cast<RunConfig&>(c)); };
  f.set = [access, name](RunConfig& c, std::string_view v) {
    if (v.empty()) throw ConfigError("empty value for " + name);
    access(c) = std::string(v);
  };
  return f;
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> t;
    t.push_back(real_field("pbar", "exponent of the MEMS nonlinearity; p = pbar + 2",
                           [](RunConfig& c) -> double& { return c.model.pbar; }));
    t.push_back(real_field("q", "exponent of the nonlocal factor, q < 2/N",
                           [](RunConfig& c) -> double& { return c.model.q; }));
    t.push_back(real_field("r", "integrability exponent, r = (pbar+1) N/2",
                           [](RunConfig& c) -> double& { return c.model.r; }));
    t.push_back(real_field("gamma", "strength of the nonlocal term", [](RunConfig& c) -> double& { return c.model.gamma; }));
    t.push_back(integer_field<int>("dim", "space dimension N", [](RunConfig& c) -> int& { return c.model.dim; }));
    t.push_back(real_field("radius", "radius of the ball", [](RunConfig& c) -> double& { return c.model.radius; }));
    t.push_back(real_field("K0", "blow-up zone constant", [](RunConfig& c) -> double& { return c.model.K0; }));
    t.push_back(real_field("A", "shrinking-set constant", [](RunConfig& c) -> double& { return c.model.A; }));
    {
      Field f{"delta0", "P2 closeness threshold; auto = min(¼ (b K0²/16)^{1/(p-1)}, 1/2)", {}, {}};
      f.get = [](const RunConfig& c) {
        return c.model.delta0 ? format_double(*c.model.delta0) : std::string("auto");
      };
      f.set = [](RunConfig& c, std::string_view v) {
        if (v == "auto") {
          c.model.delta0.reset();
        } else {
          c.model.delta0 = parse_double(v, "delta0");
        }
      };
      t.push_back(std::move(f));
    }
    t.push_back(real_field("eps0", "outer edge of the final-profile annuli", [](RunConfig& c) -> double& { return c.model.eps0; }));
    t.push_back(real_field("alpha0", "P2 window |xi| <= alpha0 sqrt|log varrho|",
                           [](RunConfig& c) -> double& { return c.model.alpha0; }));
    t.push_back(real_field("eta0", "P3 smallness constant", [](RunConfig& c) -> double& { return c.model.eta0; }));
    t.push_back(real_field("d0", "initial-data parameter along the constant mode", [](RunConfig& c) -> double& { return c.d0; }));
    t.push_back(real_field("d1", "initial-data parameter along the linear modes", [](RunConfig& c) -> double& { return c.d1; }));
    t.push_back(real_field("T", "nominal quench time of the prepared data", [](RunConfig& c) -> double& { return c.T; }));
    t.push_back(integer_field<int>("cells", "number of grid cells M", [](RunConfig& c) -> int& { return c.cells; }));
    t.push_back(integer_field<int>("core_cells", "cells in the uniform core around the origin",
                                   [](RunConfig& c) -> int& { return c.core_cells; }));
    t.push_back(real_field("refinement_ratio", "largest ratio of adjacent cell widths",
                           [](RunConfig& c) -> double& { return c.refinement_ratio; }));
    t.push_back(real_field("U_stop", "stop when max u reaches this value", [](RunConfig& c) -> double& { return c.U_stop; }));
    t.push_back(real_field("t_max", "stop at this time", [](RunConfig& c) -> double& { return c.t_max; }));
    t.push_back(real_field("rel_tol", "relative local error tolerance", [](RunConfig& c) -> double& { return c.rel_tol; }));
    t.push_back(integer_field<long>("max_steps", "step limit", [](RunConfig& c) -> long& { return c.max_steps; }));
    t.push_back(real_field("sample_ds", "trajectory sample spacing in -log tau",
                           [](RunConfig& c) -> double& { return c.sample_ds; }));
    t.push_back(real_field("snapshot_ds", "profile snapshot spacing in -log tau",
                           [](RunConfig& c) -> double& { return c.snapshot_ds; }));
    t.push_back(real_field("fit_window", "trailing fraction of the s range used by the law fits",
                           [](RunConfig& c) -> double& { return c.fit_window; }));
    t.push_back(bool_field("regrid", "rebuild the grid as the core shrinks", [](RunConfig& c) -> bool& { return c.regrid; }));
    t.push_back(bool_field("mode_damping", "re-project the constant mode to zero at checkpoints",
                           [](RunConfig& c) -> bool& { return c.mode_damping; }));
    t.push_back(real_field("damping_ds", "checkpoint spacing in -log tau", [](RunConfig& c) -> double& { return c.damping_ds; }));
    t.push_back(text_field("theta_amplitude", "full (with |S^{N-1}|) or radial (one-dimensional bubble integral)",
                           [](RunConfig& c) -> std::string& { return c.theta_amplitude; }));
    t.push_back(text_field("output_dir", "directory for run outputs", [](RunConfig& c) -> std::string& { return c.output_dir; }));
    return t;
  }();
  return table;
}

const Field& field(std::string_view key) {
  for (const auto& f : fields()) {
    if (f.name == key) return f;
  }
  throw ConfigError("unknown config key '" + std::string(key) + "'");
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> k;
    const RunConfig defaults;
    for (const auto& f : fields()) k.push_back({f.name, f.get(defaults), f.doc});
    return k;
  }();
  return keys;
}

void set_config_value(RunConfig& config, std::string_view key, std::string_view value) {
  field(key).set(config, trim(value));
}

std::string get_config_value(const RunConfig& config, std::string_view key) { return field(key).get(config); }

RunConfig parse_config(std::string_view text) {
  RunConfig config;
  std::set<std::string, std::less<>> seen;
  int line_no = 0;
  for (std::string_view line : split(text, '\n')) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string_view key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": missing key");
    if (!seen.insert(std::string(key)).second) {
      throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" + std::string(key) + "'");
    }
    try {
      set_config_value(config, key, line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return config;
}

RunConfig load_config(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot read config file " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const RunConfig& config) {
  std::string out;
  for (const auto& f : fields()) out += f.name + " = " + f.get(config) + "\n";
  return out;
}

void validate(const RunConfig& c) {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
  };
  const auto& m = c.model;
  require(m.dim >= 1, "dim must be >= 1");
  require(m.radius > 0.0, "radius must be > 0");
  require(m.pbar > 0.0, "pbar must be > 0");
  require(m.q >= 0.0, "q must be >= 0");
  require(m.r > 0.0, "r must be > 0");
  require(m.gamma >= 0.0, "gamma must be >= 0");
  require(m.K0 > 0.0 && m.A > 0.0, "K0 and A must be > 0");
  require(!m.delta0 || *m.delta0 > 0.0, "delta0 must be > 0 or auto");
  require(m.eps0 > 0.0 && m.eps0 < m.radius, "eps0 must lie in (0, radius)");
  require(m.alpha0 > 0.0 && m.eta0 > 0.0, "alpha0 and eta0 must be > 0");
  require(std::isfinite(c.d0) && std::isfinite(c.d1), "d0 and d1 must be finite");
  require(c.T > 0.0 && c.T < std::exp(-1.0), "T must lie in (0, 1/e)");
  require(c.cells >= 10, "cells must be >= 10");
  require(c.core_cells >= 2 && c.core_cells < c.cells, "core_cells must lie in [2, cells)");
  require(c.refinement_ratio > 1.0, "refinement_ratio must be > 1");
  require(c.U_stop > 0.0, "U_stop must be > 0");
  require(c.t_max >= 0.0, "t_max must be >= 0");
  require(c.rel_tol > 0.0 && c.rel_tol < 0.1, "rel_tol must lie in (0, 0.1)");
  require(c.max_steps >= 1, "max_steps must be >= 1");
  require(c.sample_ds > 0.0 && c.snapshot_ds > 0.0, "sample_ds and snapshot_ds must be > 0");
  require(c.fit_window > 0.0 && c.fit_window <= 1.0, "fit_window must lie in (0, 1]");
  require(c.damping_ds > 0.0, "damping_ds must be > 0");
  require(c.theta_amplitude == "full" || c.theta_amplitude == "radial", "theta_amplitude must be full or radial");
  require(!c.output_dir.empty(), "output_dir must not be empty");
}

ModelParams to_model_params(const RunConfig& config) { return config.model; }

RunOptions to_run_options(const RunConfig& c) {
  RunOptions o;
  o.T = c.T;
  o.d0 = c.d0;
  o.d1 = c.d1;
  o.cells = c.cells;
  o.core_cells = c.core_cells;
  o.max_ratio = c.refinement_ratio;
  o.U_stop = c.U_stop;
  o.t_max = c.t_max;
  o.max_steps = c.max_steps;
  o.sample_ds = c.sample_ds;
  o.snapshot_ds = c.snapshot_ds;
  o.regrid = c.regrid;
  o.use_full_amplitude = c.theta_amplitude == "full";
  o.mode_damping = c.mode_damping;
  o.damping_ds = c.damping_ds;
  o.controls.rel_tol = c.rel_tol;
  return o;
}

ProfileContext diagnostics_context(const RunConfig& config, const DerivedConstants& c) {
  ProfileContext ctx = make_profile_context(config.model, c, config.T);
  if (config.theta_amplitude == "full") ctx.theta_amplitude = c.theta_inf_full;
  return ctx;
}

void apply_environment(RunConfig& config) {
  if (const char* dir = std::getenv(output_dir_env); dir != nullptr && *dir != '\0') config.output_dir = dir;
}

// ---------------------------------------------------------------- diagnostics

ProfileErrorSummary summarize_profile_errors(const Trajectory& traj, const Time& T_est, const ProfileContext& ctx,
                                             double tail_span) {
  ProfileErrorSummary out;
  out.tail_span = tail_span;
  for (const auto& snap : traj.snapshots) {
    if (!(T_est - snap.t > 0.0)) continue;
    out.series.push_back(intermediate_profile_error(snap, T_est, ctx));
  }
  if (out.series.size() < 2) throw FitDegenerate("fewer than two snapshots before T_est");
  out.first_s = out.series.front().s;
  out.first_error = out.series.front().error;
  out.final_s = out.series.back().s;
  out.final_error = out.series.back().error;
  out.decrease = 1.0 - out.final_error / out.first_error;
  std::vector<double> tail;
  for (const auto& e : out.series) {
    if (e.s >= out.final_s - tail_span) tail.push_back(e.scaled);
  }
  out.tail_scaled_min = *std::min_element(tail.begin(), tail.end());
  out.tail_scaled_max = *std::max_element(tail.begin(), tail.end());
  bool growing = tail.size() >= 2;
  for (std::size_t i = 1; i < tail.size(); ++i) growing = growing && tail[i] > tail[i - 1];
  out.tail_monotone_growth = growing;
  return out;
}

RunDiagnostics diagnose_trajectory(const Trajectory& traj, const RunConfig& config) {
  RunDiagnostics d;
  if (traj.reason != Termination::quench) {
    d.notice = "diagnostics skipped: run ended with " + to_string(traj.reason);
    return d;
  }
  const ModelParams params = to_model_params(config);
  const DerivedConstants c = derive_constants(params);
  const ProfileContext ctx = diagnostics_context(config, c);
  try {
    d.T_est = estimate_T(traj);
  } catch (const Error& e) {
    d.notice = std::string("diagnostics skipped: ") + e.what();
    d.errors.push_back(std::string("T_est: ") + e.what());
    return d;
  }
  d.available = true;
  const Time& T = d.T_est.T;
  auto attempt = [&](const char* what, auto&& body) {
    try {
      body();
    } catch (const Error& e) {
      d.errors.push_back(std::string(what) + ": " + e.what());
    }
  };
  attempt("energy_identity", [&] { d.energy = energy_identity_check(traj, params); });
  attempt("theta_law", [&] { d.theta_law = theta_law_fit(traj, T, config.fit_window); });
  attempt("theta_prime", [&] {
    const double area = config.theta_amplitude == "full" ? c.sphere_area : 1.0;
    d.theta_prime = theta_prime_residual(traj, T, params, c, area, config.fit_window);
  });
  attempt("intermediate_profile", [&] { d.profile = summarize_profile_errors(traj, T, ctx); });
  attempt("final_profile", [&] { d.annuli = final_profile_check(traj.snapshots.back(), T, ctx, params.eps0); });
  attempt("modes", [&] {
    const GaussHermiteRule rule = GaussHermiteRule::for_dim(params.dim);
    d.modes = mode_history(traj, T, ctx, params, rule, config.fit_window);
  });
  attempt("p2", [&] {
    const auto& mid = traj.samples[traj.samples.size() / 2];
    const double x = p2_probe_for_time(mid.t, T, params.K0);
    d.p2 = p2_vhat_check(traj, x, T, ctx, params);
  });
  return d;
}

RunRecord execute_run(const RunConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  RunRecord record;
  record.config = config;
  try {
    const ModelParams params = to_model_params(config);
    record.trajectory = run_until_quench(params, to_run_options(config));
    record.diagnostics = diagnose_trajectory(record.trajectory, config);
  } catch (const Error& e) {
    record.error = e.what();
  }
  record.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return record;
}

int run_exit_code(const RunRecord& record) {
  if (!record.error.empty()) return exit_failure;
  switch (record.trajectory.reason) {
    case Termination::quench: return record.diagnostics.errors.empty() ? exit_ok : exit_failure;
    case Termination::time_limit: return exit_ok;
    default: return exit_failure;
  }
}

// ---------------------------------------------------------------- files

namespace {

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json law_fit_json(const LawFit& f) {
  return json{{"exponent", number(f.exponent_emp)}, {"log_amplitude", number(f.amplitude_emp)},
              {"residual", number(f.residual)},     {"s_lo", number(f.s_lo)},
              {"s_hi", number(f.s_hi)},             {"count", f.count}};
}

json constants_json(const ModelParams& params, const DerivedConstants& c) {
  return json{{"p", number(c.p)},
              {"kappa", number(c.kappa)},
              {"beta", number(c.beta)},
              {"b", number(c.b)},
              {"theta_inf", number(c.theta_inf)},
              {"theta_inf_full", number(c.theta_inf_full)},
              {"a", number(c.a)},
              {"sphere_area", number(c.sphere_area)},
              {"bubble_integral", number(bubble_integral_closed(c.p, c.b, params.dim))},
              {"delta0", number(effective_delta0(params, c))}};
}

json profile_json(const ProfileErrorSummary& p) {
  return json{{"first_s", number(p.first_s)},
              {"first_error", number(p.first_error)},
              {"final_s", number(p.final_s)},
              {"final_error", number(p.final_error)},
              {"decrease", number(p.decrease)},
              {"tail_span", number(p.tail_span)},
              {"tail_scaled_min", number(p.tail_scaled_min)},
              {"tail_scaled_max", number(p.tail_scaled_max)},
              {"tail_monotone_growth", p.tail_monotone_growth},
              {"frames", p.series.size()}};
}

json energy_json(const EnergyIdentity& e) {
  return json{{"tolerance", number(e.tolerance)}, {"pass_fraction", number(e.pass_fraction)},
              {"median", number(e.median)},       {"max", number(e.max)},
              {"count", e.relative.size()}};
}

json t_est_json(const TEstimate& t) {
  return json{{"T", number(t.T.hi)},         {"T_lo", number(t.T.lo)},   {"gap", number(t.gap)},
              {"tau_final", number(t.tau_final)}, {"slope", number(t.slope)}, {"rms", number(t.rms)},
              {"count", t.count}};
}

std::optional<DerivedConstants> constants_of(const RunConfig& config) {
  try {
    return derive_constants(to_model_params(config));
  } catch (const Error&) {
    return std::nullopt;
  }
}

void write_text(const fs::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + file.string());
}

std::string read_text(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string_view>> csv_rows(std::string_view text, std::string_view header) {
  std::vector<std::vector<std::string_view>> rows;
  auto lines = split(text, '\n');
  if (lines.empty() || trim(lines.front()) != header) {
    throw std::runtime_error("unexpected CSV header, wanted '" + std::string(header) + "'");
  }
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto line = trim(lines[i]);
    if (line.empty()) continue;
    rows.push_back(split(line, ','));
  }
  return rows;
}

constexpr std::string_view trajectory_header =
    "t,theta,u_max,u_center,dt,t_lo,tau,norm_r,grad_integral,reaction_integral,step";
constexpr std::string_view snapshots_header = "index,t,theta,u_max,nodes,file,t_lo";
constexpr std::string_view profile_header = "x,u";

std::string profile_file(std::size_t i) { return "profile_" + std::to_string(i) + ".csv"; }

Termination termination_from(const std::string& s) {
  for (auto r : {Termination::quench, Termination::time_limit, Termination::step_underflow, Termination::step_limit,
                 Termination::theta_increase}) {
    if (to_string(r) == s) return r;
  }
  throw std::runtime_error("unknown termination reason '" + s + "'");
}

void write_diagnostic_csvs(const fs::path& dir, const RunRecord& record) {
  const auto& d = record.diagnostics;
  std::string pe = "s,error,scaled,inner_error\n";
  if (d.profile) {
    for (const auto& e : d.profile->series) {
      pe += format_double(e.s) + ',' + format_double(e.error) + ',' + format_double(e.scaled) + ',' +
            format_double(e.inner_error) + '\n';
    }
  }
  write_text(dir / "profile_error.csv", pe);
  std::string modes =
      "s,q0,q1_norm,q2_scalar,q2_norm,qminus_bound,grad_perp_bound,qe_norm,shrinking_set_pass,worst_margin\n";
  if (d.modes) {
    for (const auto& row : d.modes->rows) {
      const auto& m = row.dec;
      modes += format_double(row.s) + ',' + format_double(m.q0) + ',' + format_double(m.q1_norm()) + ',' +
               format_double(m.q2_scalar) + ',' + format_double(m.q2_norm()) + ',' + format_double(m.qminus_bound) +
               ',' + format_double(m.grad_perp_bound) + ',' + format_double(m.qe_norm) + ',' +
               (row.report.pass ? "1" : "0") + ',' + format_double(row.report.worst_margin) + '\n';
    }
  }
  write_text(dir / "modes.csv", modes);
}

}  // namespace

std::string laws_json(const RunRecord& record) {
  const auto& d = record.diagnostics;
  json j;
  j["schema_version"] = laws_schema_version;
  j["available"] = d.available;
  if (!d.notice.empty()) j["notice"] = d.notice;
  const auto c = constants_of(record.config);
  const bool full = record.config.theta_amplitude == "full";
  if (d.available) j["T_est"] = t_est_json(d.T_est);
  if (d.theta_law && c) {
    json t = law_fit_json(*d.theta_law);
    t["reference_exponent"] = number(-c->beta);
    t["reference_log_amplitude"] = number(std::log(full ? c->theta_inf_full : c->theta_inf));
    t["window"] = number(record.config.fit_window);
    j["theta_law"] = t;
  }
  if (d.theta_prime && c) {
    j["theta_prime"] = json{{"area", number(full ? c->sphere_area : 1.0)},
                            {"late_max", number(d.theta_prime->late_max)},
                            {"late_median", number(d.theta_prime->late_median)},
                            {"count", d.theta_prime->residual.size()}};
  }
  if (d.energy) j["energy_identity"] = energy_json(*d.energy);
  if (d.profile) j["intermediate_profile"] = profile_json(*d.profile);
  if (d.available) {
    json a = json::array();
    for (const auto& r : d.annuli) {
      a.push_back(json{{"x_lo", number(r.x_lo)},
                       {"x_hi", number(r.x_hi)},
                       {"ratio", number(r.ratio)},
                       {"ratio_min", number(r.ratio_min)},
                       {"ratio_max", number(r.ratio_max)},
                       {"nodes", r.nodes}});
    }
    j["final_profile"] = a;
  }
  if (d.modes) {
    json m{{"frames", d.modes->rows.size()},
           {"q1_max", number(d.modes->q1_max)},
           {"shrinking_set_pass_fraction", number(d.modes->pass_fraction)},
           {"q2_reference_exponent", number(d.modes->q2_reference)},
           {"q2_fit_ok", d.modes->q2_fit_ok}};
    if (d.modes->q2_fit_ok) {
      m["q2_fit"] = law_fit_json(d.modes->q2_fit);
    } else {
      m["q2_fit_message"] = d.modes->q2_fit_message;
    }
    j["modes"] = m;
  }
  if (d.p2) {
    const auto& p = *d.p2;
    j["p2"] = json{{"x", number(p.x)},
                   {"varrho", number(p.varrho)},
                   {"t_of_x", number(p.t_of_x)},
                   {"theta_at_t_of_x", number(p.theta_tx)},
                   {"xi_max", number(p.xi_max)},
                   {"rows", p.rows.size()},
                   {"sup_deviation", number(p.sup_deviation)},
                   {"sup_center_deviation", number(p.sup_center_deviation)},
                   {"sup_gradient", number(p.sup_gradient)},
                   {"gradient_scaled", number(p.gradient_scaled)},
                   {"delta0", number(p.delta0)},
                   {"within_delta0", p.within_delta0},
                   {"center_within_delta0", p.sup_center_deviation <= p.delta0}};
  }
  if (!d.errors.empty()) j["errors"] = d.errors;
  return j.dump(2) + "\n";
}

std::string summary_json(const RunRecord& record) {
  const auto& traj = record.trajectory;
  const auto& d = record.diagnostics;
  json j;
  j["schema_version"] = summary_schema_version;
  j["config"] = serialize_config(record.config);
  j["termination"] = record.error.empty() ? to_string(traj.reason) : std::string("error");
  if (!record.error.empty()) j["error"] = record.error;
  if (!d.notice.empty()) j["notice"] = d.notice;
  j["run"] = json{{"theta0", number(traj.theta0)},
                  {"T_nominal", number(traj.T_nominal)},
                  {"steps", traj.steps},
                  {"rejected", traj.rejected},
                  {"regrids", traj.regrids},
                  {"samples", traj.samples.size()},
                  {"snapshots", traj.snapshots.size()},
                  {"argmax_at_origin", traj.argmax_at_origin},
                  {"theta_monotone", traj.theta_monotone},
                  {"theta_strict", traj.theta_strict},
                  {"theta_violation", traj.theta_violation},
                  {"termination", to_string(traj.reason)}};
  j["wall_clock_seconds"] = number(record.wall_seconds);
  if (const auto c = constants_of(record.config)) j["constants"] = constants_json(record.config.model, *c);
  if (d.available) j["T_est"] = t_est_json(d.T_est);
  if (d.theta_law) {
    j["laws"] = json{{"beta_emp", number(-d.theta_law->exponent_emp)},
                     {"theta_inf_emp", number(std::exp(d.theta_law->amplitude_emp))},
                     {"residual", number(d.theta_law->residual)}};
  }
  if (d.modes) j["shrinking_set_pass_fraction"] = number(d.modes->pass_fraction);
  if (d.profile) j["profile_error"] = profile_json(*d.profile);
  if (d.energy) j["energy_identity"] = energy_json(*d.energy);
  j["diagnostic_errors"] = d.errors;
  return j.dump(2) + "\n";
}

void write_diagnostics(const fs::path& dir, const RunRecord& record) {
  write_diagnostic_csvs(dir, record);
  write_text(dir / "laws.json", laws_json(record));
  write_text(dir / "summary.json", summary_json(record));
}

void write_run(const fs::path& dir, const RunRecord& record) {
  fs::create_directories(dir);
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.starts_with("profile_") && name.ends_with(".csv") && name != "profile_error.csv") fs::remove(entry.path());
  }
  write_text(dir / "config.txt", serialize_config(record.config));
  const auto& traj = record.trajectory;
  std::string t(trajectory_header);
  t += '\n';
  for (const auto& s : traj.samples) {
    t += format_double(s.t.hi) + ',' + format_double(s.theta) + ',' + format_double(s.u_max) + ',' +
         format_double(s.u_center) + ',' + format_double(s.dt) + ',' + format_double(s.t.lo) + ',' +
         format_double(s.tau) + ',' + format_double(s.norm_r) + ',' + format_double(s.grad_integral) + ',' +
         format_double(s.reaction_integral) + ',' + std::to_string(s.step) + '\n';
  }
  write_text(dir / "trajectory.csv", t);
  std::string index(snapshots_header);
  index += '\n';
  for (std::size_t i = 0; i < traj.snapshots.size(); ++i) {
    const auto& snap = traj.snapshots[i];
    index += std::to_string(i) + ',' + format_double(snap.t.hi) + ',' + format_double(snap.theta) + ',' +
             format_double(snap.u_max) + ',' + std::to_string(snap.x.size()) + ',' + profile_file(i) + ',' +
             format_double(snap.t.lo) + '\n';
    std::string prof(profile_header);
    prof += '\n';
    for (std::size_t k = 0; k < snap.x.size(); ++k) prof += format_double(snap.x[k]) + ',' + format_double(snap.u[k]) + '\n';
    write_text(dir / profile_file(i), prof);
  }
  write_text(dir / "snapshots.csv", index);
  write_diagnostics(dir, record);
}

RunRecord read_run(const fs::path& dir) {
  RunRecord record;
  record.config = parse_config(read_text(dir / "config.txt"));
  const json summary = json::parse(read_text(dir / "summary.json"));
  const json& run = summary.at("run");
  auto& traj = record.trajectory;
  traj.reason = termination_from(run.at("termination").get<std::string>());
  if (summary.contains("error")) record.error = summary.at("error").get<std::string>();
  auto num = [](const json& v) { return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>(); };
  traj.theta0 = num(run.at("theta0"));
  traj.T_nominal = num(run.at("T_nominal"));
  traj.steps = run.at("steps").get<long>();
  traj.rejected = run.at("rejected").get<long>();
  traj.regrids = run.at("regrids").get<int>();
  traj.argmax_at_origin = run.at("argmax_at_origin").get<bool>();
  traj.theta_monotone = run.at("theta_monotone").get<bool>();
  traj.theta_strict = run.at("theta_strict").get<bool>();
  traj.theta_violation = run.at("theta_violation").get<std::string>();
  record.wall_seconds = num(summary.at("wall_clock_seconds"));

  const std::string ttext = read_text(dir / "trajectory.csv");
  for (const auto& row : csv_rows(ttext, trajectory_header)) {
    if (row.size() != 11) throw std::runtime_error("trajectory.csv: wrong column count");
    TrajectorySample s;
    s.t = Time(parse_double(row[0]), parse_double(row[5]));
    s.theta = parse_double(row[1]);
    s.u_max = parse_double(row[2]);
    s.u_center = parse_double(row[3]);
    s.dt = parse_double(row[4]);
    s.tau = parse_double(row[6]);
    s.norm_r = parse_double(row[7]);
    s.grad_integral = parse_double(row[8]);
    s.reaction_integral = parse_double(row[9]);
    s.step = parse_integer<long>(row[10], "step");
    traj.samples.push_back(s);
  }
  const std::string stext = read_text(dir / "snapshots.csv");
  for (const auto& row : csv_rows(stext, snapshots_header)) {
    if (row.size() != 7) throw std::runtime_error("snapshots.csv: wrong column count");
    Snapshot snap;
    snap.t = Time(parse_double(row[1]), parse_double(row[6]));
    snap.theta = parse_double(row[2]);
    snap.u_max = parse_double(row[3]);
    const std::string ptext = read_text(dir / std::string(row[5]));
    for (const auto& p : csv_rows(ptext, profile_header)) {
      if (p.size() != 2) throw std::runtime_error(std::string(row[5]) + ": wrong column count");
      snap.x.push_back(parse_double(p[0]));
      snap.u.push_back(parse_double(p[1]));
    }
    traj.snapshots.push_back(std::move(snap));
  }
  return record;
}

// ---------------------------------------------------------------- commands

int cmd_constants(const RunConfig& config, bool as_json, std::ostream& out, std::ostream& err) {
  const ModelParams params = to_model_params(config);
  const CriticalCheck check = check_critical(params);
  if (!check.ok) {
    err << "critical regime violated: " << check.message << '\n';
    return exit_config;
  }
  const DerivedConstants c = derive_constants(params);
  const json j = constants_json(params, c);
  if (as_json) {
    out << j.dump(2) << '\n';
    return exit_ok;
  }
  out << "pbar " << format_double(params.pbar) << "  q " << format_double(params.q) << "  r "
      << format_double(params.r) << "  gamma " << format_double(params.gamma) << "  N " << params.dim << '\n';
  for (const auto& [key, value] : j.items()) {
    out << std::left << std::setw(16) << key << format_double(value.get<double>()) << '\n';
  }
  return exit_ok;
}

namespace {

void print_run_report(const RunRecord& record, const fs::path& dir, std::ostream& out) {
  const auto& traj = record.trajectory;
  const auto& d = record.diagnostics;
  out << "output       " << dir.string() << '\n';
  out << "termination  " << (record.error.empty() ? to_string(traj.reason) : "error: " + record.error) << '\n';
  out << "steps        " << traj.steps << " (rejected " << traj.rejected << ", regrids " << traj.regrids << ")\n";
  out << "wall clock   " << std::fixed << std::setprecision(2) << record.wall_seconds << " s\n";
  out.unsetf(std::ios::fixed);
  out << std::setprecision(6);
  if (!d.notice.empty()) out << "notice       " << d.notice << '\n';
  if (d.available) out << "T_est        " << format_double(d.T_est.T.value()) << '\n';
  if (d.theta_law) out << "beta_emp     " << -d.theta_law->exponent_emp << '\n';
  if (d.modes) out << "shrinking    " << d.modes->pass_fraction << " of frames inside\n";
  for (const auto& e : d.errors) out << "diagnostic error: " << e << '\n';
}

}  // namespace

int cmd_run(RunConfig config, std::ostream& out, std::ostream& err) {
  try {
    validate(config);
    derive_constants(to_model_params(config));
  } catch (const Error& e) {
    err << "configuration error: " << e.what() << '\n';
    return exit_config;
  }
  const fs::path dir(config.output_dir);
  const RunRecord record = execute_run(config);
  try {
    write_run(dir, record);
  } catch (const std::exception& e) {
    err << "output error: " << e.what() << '\n';
    return exit_failure;
  }
  print_run_report(record, dir, out);
  return run_exit_code(record);
}

int cmd_diagnose(const fs::path& dir, std::ostream& out, std::ostream& err) {
  RunRecord record;
  try {
    record = read_run(dir);
    validate(record.config);
  } catch (const std::exception& e) {
    err << "cannot load run from " << dir.string() << ": " << e.what() << '\n';
    return exit_config;
  }
  if (record.error.empty()) {
    try {
      record.diagnostics = diagnose_trajectory(record.trajectory, record.config);
    } catch (const Error& e) {
      record.diagnostics.errors.push_back(e.what());
    }
  }
  try {
    write_diagnostics(dir, record);
  } catch (const std::exception& e) {
    err << "output error: " << e.what() << '\n';
    return exit_failure;
  }
  print_run_report(record, dir, out);
  return run_exit_code(record);
}

int cmd_selftest(const SelfTestOptions& options, std::ostream& out, std::ostream& err) {
  const auto results = run_selftest(options);
  std::vector<std::string> failed;
  for (const auto& r : results) {
    out << (r.pass ? "PASS " : "FAIL ") << std::left << std::setw(24) << r.name << " measured "
        << std::setw(12) << format_double(r.measured) << " limit " << std::setw(8) << format_double(r.tolerance)
        << ' ' << std::fixed << std::setprecision(3) << r.seconds << " s  " << r.detail << '\n';
    out.unsetf(std::ios::fixed);
    out << std::setprecision(6);
    if (!r.pass) failed.push_back(r.name);
  }
  if (failed.empty()) return exit_ok;
  err << "failed oracle";
  for (const auto& f : failed) err << ' ' << f;
  err << '\n';
  return exit_failure;
}

SweepAxis parse_sweep_axis(std::string_view text) {
  const auto eq = text.find('=');
  if (eq == std::string_view::npos) throw ConfigError("sweep axis must read key=v1,v2,...");
  SweepAxis axis;
  axis.key = std::string(trim(text.substr(0, eq)));
  const auto values = trim(text.substr(eq + 1));
  if (!values.empty()) {
    for (auto v : split(values, ',')) axis.values.push_back(parse_double(trim(v), axis.key));
  }
  return axis;
}

namespace {

struct SweepRow {
  std::vector<double> values;
  bool ok = false;
  std::string reason;
  std::string message;
  std::string dir;
  RunDiagnostics diagnostics;
};

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char ch : s) {
    if (ch == '"') q += '"';
    q += ch == '\n' ? ' ' : ch;
  }
  return q + "\"";
}

}  // namespace

int cmd_sweep(RunConfig config, const std::vector<SweepAxis>& axes, int jobs, std::ostream& out, std::ostream& err) {
  if (axes.empty()) {
    err << "sweep needs at least one axis\n";
    return exit_config;
  }
  std::size_t total = 1;
  for (const auto& axis : axes) {
    if (axis.values.empty()) {
      err << "sweep axis '" << axis.key << "' has no values\n";
      return exit_config;
    }
    try {
      RunConfig probe = config;
      set_config_value(probe, axis.key, format_double(axis.values.front()));
    } catch (const Error& e) {
      err << "sweep axis: " << e.what() << '\n';
      return exit_config;
    }
    total *= axis.values.size();
  }
  if (jobs < 1) {
    err << "jobs must be >= 1\n";
    return exit_config;
  }
  const fs::path base(config.output_dir);
  std::vector<SweepRow> rows(total);
  for (std::size_t k = 0; k < total; ++k) {
    std::size_t rest = k;
    rows[k].values.resize(axes.size());
    for (std::size_t a = axes.size(); a-- > 0;) {
      rows[k].values[a] = axes[a].values[rest % axes[a].values.size()];
      rest /= axes[a].values.size();
    }
    char name[32];
    std::snprintf(name, sizeof name, "run_%03zu", k);
    rows[k].dir = name;
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < total; k = next++) {
      SweepRow& row = rows[k];
      RunConfig c = config;
      try {
        for (std::size_t a = 0; a < axes.size(); ++a) set_config_value(c, axes[a].key, format_double(row.values[a]));
        c.output_dir = (base / row.dir).string();
        validate(c);
        derive_constants(to_model_params(c));
        const RunRecord record = execute_run(c);
        write_run(c.output_dir, record);
        row.reason = record.error.empty() ? to_string(record.trajectory.reason) : "error";
        row.diagnostics = record.diagnostics;
        row.ok = run_exit_code(record) == exit_ok && record.trajectory.reason == Termination::quench;
        if (!record.error.empty()) {
          row.message = record.error;
        } else if (!record.diagnostics.errors.empty()) {
          row.message = record.diagnostics.errors.front();
        } else {
          row.message = record.diagnostics.notice;
        }
      } catch (const std::exception& e) {
        row.ok = false;
        row.reason = "error";
        row.message = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  const std::size_t threads = std::min<std::size_t>(static_cast<std::size_t>(jobs), total);
  for (std::size_t i = 1; i < threads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::string csv = "index";
  for (const auto& axis : axes) csv += ',' + axis.key;
  csv += ",status,reason,T_est,beta_emp,theta_inf_emp,shrinking_set_pass_fraction,q2_exponent,"
         "energy_pass_fraction,profile_decrease,dir,message\n";
  std::size_t succeeded = 0;
  for (std::size_t k = 0; k < total; ++k) {
    const auto& row = rows[k];
    const auto& d = row.diagnostics;
    auto opt = [](bool has, double v) { return has && std::isfinite(v) ? format_double(v) : std::string(); };
    csv += std::to_string(k);
    for (double v : row.values) csv += ',' + format_double(v);
    csv += std::string(",") + (row.ok ? "ok" : "failed") + ',' + row.reason + ',';
    csv += opt(d.available, d.T_est.T.value()) + ',';
    csv += opt(d.theta_law.has_value(), d.theta_law ? -d.theta_law->exponent_emp : 0.0) + ',';
    csv += opt(d.theta_law.has_value(), d.theta_law ? std::exp(d.theta_law->amplitude_emp) : 0.0) + ',';
    csv += opt(d.modes.has_value(), d.modes ? d.modes->pass_fraction : 0.0) + ',';
    csv += opt(d.modes && d.modes->q2_fit_ok, d.modes ? d.modes->q2_fit.exponent_emp : 0.0) + ',';
    csv += opt(d.energy.has_value(), d.energy ? d.energy->pass_fraction : 0.0) + ',';
    csv += opt(d.profile.has_value(), d.profile ? d.profile->decrease : 0.0) + ',';
    csv += row.dir + ',' + csv_field(row.message) + '\n';
    if (row.ok) ++succeeded;
    out << row.dir << ' ' << (row.ok ? "ok" : "failed") << ' ' << row.reason
        << (row.message.empty() ? "" : "  " + row.message) << '\n';
  }
  try {
    fs::create_directories(base);
    write_text(base / "sweep.csv", csv);
  } catch (const std::exception& e) {
    err << "output error: " << e.what() << '\n';
    return exit_failure;
  }
  out << succeeded << " of " << total << " runs succeeded; table in " << (base / "sweep.csv").string() << '\n';
  return succeeded > 0 ? exit_ok : exit_failure;
}

}  // namespace quench
