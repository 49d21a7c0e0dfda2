#pragma once

// Command-line front end: one subcommand per verification, each writing a
// single report and printing a one-line PASS/FAIL summary.
//
// Exit codes: 0 all checks pass, 1 validation or check failure, 2 unknown
// command.

#include "orbk/asymptotics.hpp"
#include "orbk/bergman.hpp"
#include "orbk/index.hpp"
#include "orbk/io.hpp"
#include "orbk/localmodel.hpp"
#include "orbk/models.hpp"

#include <CLI11.hpp>

#include <array>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace orbk::cli {

inline const std::vector<std::string>& commands() {
  static const std::vector<std::string> list{"density", "split",    "fit",      "decay",      "pairing",
                                             "bcoef",   "rrk",      "charsum",  "recover",    "lowerbound",
                                             "pullback", "localmodel", "phase"};
  return list;
}

inline std::string usage() {
  std::string s = "usage: orbk <command> [options]\ncommands:";
  for (const auto& c : commands()) s += " " + c;
  s += "\nrun 'orbk <command> --help' for options\n";
  return s;
}

struct RunConfig {
  std::string command;
  std::string model;
  std::optional<int> n;
  std::vector<int> d;
  std::optional<int> m;
  std::string m_range;
  std::vector<double> r;
  std::string chart = "U0";
  std::string grid;  // "lo:hi:count" log-spaced radial grid
  int terms = 2;
  double amplitude = 0.0;  // 0 selects the per-command default
  double support = 0.5;
  double center = 1.0;
  double width = 2.5;
  unsigned seed = 7;
  int cases = 100;
  std::optional<double> tolerance;
  std::string out;
  std::string format = "json";
  bool gnuplot = false;
  int nx = 512;
  int Q = 256;
  double X = 6.0;
  std::string config;
};

/// Keys of a --config file override the corresponding flags.
inline void apply_config(RunConfig& cfg, const json& j) {
  if (!j.is_object()) throw FieldError("config", "top level must be an object");
  for (const auto& [key, v] : j.items()) {
    try {
      if (key == "command") cfg.command = v.get<std::string>();
      else if (key == "model") cfg.model = v.is_string() ? v.get<std::string>() : v.dump();
      else if (key == "n") cfg.n = v.get<int>();
      else if (key == "d") cfg.d = v.get<std::vector<int>>();
      else if (key == "m") cfg.m = v.get<int>();
      else if (key == "m_range" || key == "m-range") cfg.m_range = v.get<std::string>();
      else if (key == "r") cfg.r = v.is_array() ? v.get<std::vector<double>>() : std::vector<double>{v.get<double>()};
      else if (key == "chart") cfg.chart = v.get<std::string>();
      else if (key == "grid") cfg.grid = v.get<std::string>();
      else if (key == "terms") cfg.terms = v.get<int>();
      else if (key == "amplitude") cfg.amplitude = v.get<double>();
      else if (key == "support") cfg.support = v.get<double>();
      else if (key == "center") cfg.center = v.get<double>();
      else if (key == "width") cfg.width = v.get<double>();
      else if (key == "seed") cfg.seed = v.get<unsigned>();
      else if (key == "cases") cfg.cases = v.get<int>();
      else if (key == "tolerance" || key == "tol") cfg.tolerance = v.get<double>();
      else if (key == "out") cfg.out = v.get<std::string>();
      else if (key == "format") cfg.format = v.get<std::string>();
      else if (key == "gnuplot") cfg.gnuplot = v.get<bool>();
      else if (key == "nx") cfg.nx = v.get<int>();
      else if (key == "Q") cfg.Q = v.get<int>();
      else if (key == "X") cfg.X = v.get<double>();
      else throw FieldError("config." + key, "unknown key");
    } catch (const json::exception& e) {
      throw FieldError("config." + key, std::string("wrong type: ") + e.what());
    }
  }
}

inline void validate(const RunConfig& cfg) {
  if (cfg.format != "json" && cfg.format != "csv") throw FieldError("format", "must be csv or json");
  if (cfg.tolerance && !(*cfg.tolerance > 0.0)) throw FieldError("tolerance", "must be positive");
  if (cfg.terms < 1) throw FieldError("terms", "must be at least 1");
  if (cfg.cases < 1) throw FieldError("cases", "must be at least 1");
  if (!(cfg.support > 0.0)) throw FieldError("support", "must be positive");
  for (double r : cfg.r) {
    if (!(r >= 0.0) || !std::isfinite(r)) throw FieldError("r", "must be finite and non-negative");
  }
}

namespace detail {

struct Context {
  const RunConfig& cfg;
  std::ostream& log;
  Report report;
  std::optional<ModelSpec> spec;
  ModelPtr model;

  double tol(double fallback) const { return cfg.tolerance.value_or(fallback); }

  const OrbifoldModel& need_model() {
    if (!model) {
      spec = resolve_model(cfg.model, cfg.n, cfg.d);
      model = build_model(*spec);
      report.model = model_to_json(*spec);
    }
    return *model;
  }

  const OrbifoldModel& need_football() {
    const auto& m = need_model();
    if (m.kind != ModelKind::football) throw FieldError("model", report.command + " needs a football model");
    return m;
  }

  /// Powers from --m or --m-range, else the fallback; each must be a
  /// multiple of the bundle step.
  std::vector<int> powers(const std::vector<int>& fallback) {
    std::vector<int> ms;
    if (!cfg.m_range.empty()) ms = parse_int_range(cfg.m_range, "m-range");
    else if (cfg.m) ms = {*cfg.m};
    else ms = fallback;
    if (ms.empty()) throw FieldError("m", "m-range is empty");
    const int step = model ? model->bundle_step : 1;
    for (int m : ms) {
      if (m < 0) throw FieldError("m", "powers must be non-negative");
      if (m % step != 0) {
        throw FieldError("m", "m=" + std::to_string(m) + " is not a multiple of bundle_step=" + std::to_string(step));
      }
    }
    report.params["m"] = ms;
    return ms;
  }

  int bundle_round(int m) const { return ((m + model->bundle_step - 1) / model->bundle_step) * model->bundle_step; }

  std::vector<ChartPoint> points(const std::vector<double>& fallback) {
    const auto& rs = cfg.r.empty() ? fallback : cfg.r;
    std::vector<ChartPoint> out;
    for (double r : rs) out.push_back({cfg.chart, {std::sqrt(r), 0.0}});
    report.params["chart"] = cfg.chart;
    report.params["r"] = rs;
    return out;
  }

  std::vector<ChartPoint> radial_grid() {
    if (cfg.grid.empty()) {
      report.params["grid"] = "0 plus 199 log-spaced r in [1e-3, 1e3]";
      return default_radial_grid();
    }
    std::vector<double> parts;
    std::stringstream ss(cfg.grid);
    std::string item;
    try {
      while (std::getline(ss, item, ':')) parts.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw FieldError("grid", "expected lo:hi:count");
    }
    if (parts.size() != 3 || !(parts[0] > 0.0) || !(parts[1] > parts[0]) || parts[2] < 3) {
      throw FieldError("grid", "expected lo:hi:count with 0 < lo < hi and count >= 3");
    }
    report.params["grid"] = cfg.grid;
    return default_radial_grid(static_cast<int>(parts[2]), parts[0], parts[1]);
  }

  int steps(int m) const { return model ? m / model->bundle_step : m; }
};

inline std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

inline std::string sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

inline void cmd_density(Context& ctx) {
  const auto& model = ctx.need_model();
  const auto ms = ctx.powers({10 * model.bundle_step});
  const auto pts = ctx.points({0.0, 0.5, 1.0, 2.0});
  const bool football = model.kind == ModelKind::football;
  const double tol = ctx.tol(1e-9);
  auto& rep = ctx.report;
  rep.columns = {"m", "N", "chart", "r", "r_proxy", "rho", "closed_form"};
  const auto samples = parallel_map(ms.size(), [&](std::size_t i) {
    return sample_density(build_section_space(ctx.model, ms[i]), pts);
  });
  double worst = 0.0;
  double min_rho = std::numeric_limits<double>::infinity();
  for (const auto& s : samples) {
    for (const auto& rec : s.records) {
      json closed = nullptr;
      if (football) {
        const double cf = football_density_closed_form(model.football_order(), s.m, rec.r);
        closed = cf;
        worst = std::max(worst, std::abs(rec.rho - cf) / cf);
      }
      min_rho = std::min(min_rho, rec.rho);
      rep.add_row({s.m, s.steps, rec.point.chart, rec.r, rec.r_proxy, rec.rho, closed});
      ctx.log << "rho(m=" << s.m << ", N=" << s.steps << ", " << rec.point.chart << ", r=" << rec.r
              << ") = " << fixed(rec.rho) << "\n";
    }
  }
  rep.check("rho_nonnegative", min_rho, 0.0, min_rho >= 0.0);
  if (football) rep.check("closed_form_rel_error", worst, tol, worst <= tol);
}

inline void cmd_split(Context& ctx) {
  const auto& model = ctx.need_football();
  const auto ms = ctx.powers({10 * model.bundle_step});
  const auto pts = ctx.points({0.0, 0.5, 1.0, 2.0});
  const double tol = ctx.tol(1e-9);
  auto& rep = ctx.report;
  rep.columns = {"m", "N", "chart", "r", "diag", "offdiag", "total", "gram_density"};
  double worst = 0.0;
  for (int m : ms) {
    const auto space = build_section_space(ctx.model, m);
    for (const auto& p : pts) {
      const auto s = split_density(space, p);
      const double rho = density(space, p);
      const double r = model.chart(p.chart).radial(p.z);
      worst = std::max(worst, std::abs(s.total() - rho) / rho);
      rep.add_row({m, ctx.steps(m), p.chart, r, s.diag, s.offdiag, s.total(), rho});
      ctx.log << "m=" << m << " r=" << r << ": diag " << fixed(s.diag) << ", offdiag " << sci(s.offdiag) << "\n";
    }
  }
  rep.check("split_vs_gram_rel_error", worst, tol, worst <= tol);
}

inline std::vector<int> stepped(int lo, int hi, int step) {
  std::vector<int> out;
  for (int m = lo; m <= hi; m += step) out.push_back(m);
  return out;
}

inline void cmd_fit(Context& ctx) {
  const auto& model = ctx.need_model();
  const int step = model.bundle_step;
  const auto ms = ctx.powers(stepped(step, step * (200 / step), step));
  const double r = ctx.cfg.r.empty() ? 1.0 : ctx.cfg.r.front();
  ctx.report.params["r"] = r;
  ctx.report.params["terms"] = ctx.cfg.terms;
  const auto series = density_series(ctx.model, {ctx.cfg.chart, {std::sqrt(r), 0.0}}, ms);
  const auto fit = fit_expansion(series, ctx.cfg.terms);
  auto& rep = ctx.report;
  // a_j is the coefficient of m^{dim - j}; in N = m / bundle_step it is
  // a_j * step^{dim - j}.
  rep.columns = {"j", "power_of_m", "a_j_m", "a_j_N"};
  for (int j = 0; j < fit.terms; ++j) {
    const double a = fit.coefficients[static_cast<std::size_t>(j)];
    rep.add_row({j, fit.dim - j, a, a * std::pow(step, fit.dim - j)});
    ctx.log << "a_" << j << " = " << fixed(a, 12) << " (N convention " << fixed(a * std::pow(step, fit.dim - j), 12)
            << ")\n";
  }
  rep.params["m_used"] = fit.ms;
  rep.params["condition"] = fit.condition;
  if (fit.tail) rep.notes.push_back(fit.tail->fitted() ? "tail-affected powers dropped using decay fit"
                                                         : "singular tail below noise floor at this point");
  rep.check("vandermonde_condition", fit.condition, 1e10, fit.condition <= 1e10);
  if (model.kind == ModelKind::football) {
    const double e0 = std::abs(fit.coefficients[0] - 1.0);
    rep.check("a0", fit.coefficients[0], ctx.tol(1e-6), e0 <= ctx.tol(1e-6), "expected 1");
    if (fit.terms > 1) {
      const double e1 = std::abs(fit.coefficients[1] - 1.0);
      rep.check("a1", fit.coefficients[1], 1e-3, e1 <= 1e-3, "expected 1");
    }
  }
}

inline void cmd_decay(Context& ctx) {
  const auto& model = ctx.need_football();
  const int step = model.bundle_step;
  const auto ms = ctx.powers(stepped(step, step * (100 / step), step));
  const double r = ctx.cfg.r.empty() ? 0.5 : ctx.cfg.r.front();
  ctx.report.params["r"] = r;
  const auto series = density_series(ctx.model, {ctx.cfg.chart, {std::sqrt(r), 0.0}}, ms);
  const auto fit = fit_decay_rate(series);
  auto& rep = ctx.report;
  rep.columns = {"m", "N", "offdiag", "log_abs_offdiag"};
  for (const auto& v : series.values) {
    const double off = *v.offdiag;
    rep.add_row({v.m, ctx.steps(v.m), off, std::abs(off) > 0.0 ? json(std::log(std::abs(off))) : json(nullptr)});
  }
  rep.params["status"] = fit.fitted() ? "fitted" : "noise_floor";
  if (fit.fitted()) {
    rep.params["slope"] = fit.slope;
    rep.params["intercept"] = fit.intercept;
    rep.params["r_squared"] = fit.r_squared;
    rep.params["delta_r"] = fit.delta_r;
    rep.params["delta_r2"] = fit.delta_r2;
    ctx.log << "slope " << fit.slope << ", R^2 " << fixed(fit.r_squared, 6) << ", delta (slope/r) " << fit.delta_r
            << ", delta (slope/r^2) " << fit.delta_r2 << "\n";
    const double min_r2 = 1.0 - ctx.tol(0.01);
    rep.check("r_squared", fit.r_squared, min_r2, fit.r_squared > min_r2);
    rep.check("delta_positive", fit.delta_r, 0.0, fit.delta_r > 0.0);
  } else {
    rep.params["message"] = fit.message;
    ctx.log << "noise floor: " << fit.message << "\n";
    rep.check("noise_floor_reported", 0.0, kNoiseFloor, true, fit.message);
  }
}

inline void cmd_pairing(Context& ctx) {
  const auto& model = ctx.need_football();
  const int n = model.football_order();
  const int top = n * (400 / n);
  const auto ms = ctx.powers({n * (50 / n), n * (100 / n), n * (top / (2 * n)), top});
  const double amp = ctx.cfg.amplitude != 0.0 ? ctx.cfg.amplitude : 1.0;
  const TestFunction phi{ctx.cfg.chart, amp, ctx.cfg.support};
  ctx.report.params["amplitude"] = amp;
  ctx.report.params["support"] = phi.support;
  ctx.report.params["chart"] = phi.chart;
  const auto res = pair_with_test_function(ctx.model, ms, phi);
  auto& rep = ctx.report;
  rep.columns = {"m", "N", "pairing", "error"};
  std::vector<double> errors;
  for (std::size_t i = 0; i < ms.size(); ++i) {
    errors.push_back(res.values[i] - res.expected);
    rep.add_row({ms[i], ctx.steps(ms[i]), res.values[i], errors.back()});
  }
  rep.params["limit"] = res.limit;
  rep.params["expected"] = res.expected;
  rep.params["point"] = res.point;
  ctx.log << "pairing limit " << fixed(res.limit, 8) << " vs b*phi(z0) " << fixed(res.expected, 8) << "\n";
  const double tol = ctx.tol(0.02);
  rep.check("limit_rel_error", res.relative_error(), tol, res.relative_error() <= tol);
  // First-order decay: |e(m2)| <= 1.25 (m1/m2) |e(m1)| for successive powers.
  double worst = 0.0;
  for (std::size_t i = 0; i + 1 < ms.size(); ++i) {
    if (errors[i] == 0.0) continue;
    const double ratio = std::abs(errors[i + 1] / errors[i]) * ms[i + 1] / ms[i];
    worst = std::max(worst, ratio);
  }
  rep.check("errors_shrink_first_order", worst, 1.25, worst <= 1.25, "max |e2/e1| * m2/m1");
}

inline void cmd_bcoef(Context& ctx) {
  const auto& model = ctx.need_model();
  auto& rep = ctx.report;
  rep.columns = {"point", "order", "b", "imaginary", "exact"};
  const double tol = ctx.tol(1e-12);
  double worst_imag = 0.0;
  std::vector<double> values;
  for (const auto& p : model.singular_points) {
    const auto b = b_coefficient(p);
    det_positivity_check(p);
    const std::string exact = b.exact ? to_string(*b.exact) : "";
    rep.add_row({p.label, p.action.order(), b.value, b.imaginary, b.exact ? json(exact) : json(nullptr)});
    worst_imag = std::max(worst_imag, std::abs(b.imaginary));
    values.push_back(b.value);
    ctx.log << "b" << p.label << " = " << fixed(b.value, 12) << (b.exact ? " (exact " + exact + ")" : "") << "\n";
  }
  rep.check("imaginary_part", worst_imag, tol, worst_imag < tol);
  if (model.kind == ModelKind::football) {
    const int n = model.football_order();
    const double expected = (n - 1.0) / (2.0 * n);
    double worst = 0.0;
    for (double v : values) worst = std::max(worst, std::abs(v - expected));
    rep.check("football_b_equals_(n-1)/(2n)", worst, tol, worst <= tol);
  }
}

inline void cmd_rrk(Context& ctx) {
  const auto& model = ctx.need_model();
  const auto ms = ctx.powers(stepped(0, 10 * model.bundle_step, model.bundle_step));
  auto& rep = ctx.report;
  rep.columns = {"m", "N", "smooth", "corrections", "total", "oracle", "match"};
  int mismatches = 0;
  for (int m : ms) {
    const auto r = rrk_euler_characteristic(model, m);
    std::string corr;
    for (const auto& c : r.corrections) corr += (corr.empty() ? "" : " ") + c.point + ":" + to_string(c.exact);
    rep.add_row({m, ctx.steps(m), to_string(r.smooth_part), corr, to_string(r.total), r.dimension_oracle, r.matches()});
    if (!r.matches()) ++mismatches;
    ctx.log << "m=" << m << " N=" << ctx.steps(m) << ": total " << to_string(r.total) << ", oracle "
            << r.dimension_oracle << ", " << (r.matches() ? "PASS" : "FAIL") << "\n";
  }
  rep.check("rrk_equals_dimension", mismatches, 0.0, mismatches == 0, "number of mismatching powers");
}

/// Random diagonal abelian actions with |G| <= max_order and isolated or
/// non-isolated fixed points alike (the identity needs neither).
inline std::vector<std::pair<GroupAction, std::vector<cplx>>> random_charsum_cases(unsigned seed, int count,
                                                                                 int max_order = 12) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> dim_dist(1, 3), gen_dist(1, 2), order_dist(2, max_order);
  std::normal_distribution<double> normal;
  std::vector<std::pair<GroupAction, std::vector<cplx>>> out;
  while (static_cast<int>(out.size()) < count) {
    const int dim = dim_dist(rng);
    std::vector<CyclicGenerator> gens;
    const int ngen = gen_dist(rng);
    for (int g = 0; g < ngen; ++g) {
      CyclicGenerator gen;
      gen.order = order_dist(rng);
      for (int j = 0; j < dim; ++j) gen.weights.push_back(std::uniform_int_distribution<int>(0, gen.order - 1)(rng));
      gens.push_back(gen);
    }
    GroupAction action = GroupAction::product(dim, gens);
    if (action.order() > max_order) continue;
    std::vector<cplx> z;
    for (int j = 0; j < dim; ++j) z.push_back(0.8 * cplx(normal(rng), normal(rng)));
    out.emplace_back(std::move(action), std::move(z));
  }
  return out;
}

inline void cmd_charsum(Context& ctx) {
  auto& rep = ctx.report;
  std::vector<std::pair<GroupAction, std::vector<cplx>>> cases;
  if (!ctx.cfg.model.empty()) {
    const auto& model = ctx.need_model();
    if (model.kind != ModelKind::local_cone) throw FieldError("model", "charsum takes a cone model");
    const auto& action = model.singular_points.front().action;
    std::mt19937_64 rng(ctx.cfg.seed);
    std::normal_distribution<double> normal;
    for (int c = 0; c < ctx.cfg.cases; ++c) {
      std::vector<cplx> z;
      for (int j = 0; j < action.dim(); ++j) z.push_back(0.8 * cplx(normal(rng), normal(rng)));
      cases.emplace_back(action, std::move(z));
    }
  } else {
    rep.model = nullptr;
    cases = random_charsum_cases(ctx.cfg.seed, ctx.cfg.cases);
  }
  rep.params["seed"] = ctx.cfg.seed;
  rep.params["cases"] = ctx.cfg.cases;
  std::mt19937_64 mrng(ctx.cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<int> ms;
  if (ctx.cfg.m) ms.assign(cases.size(), *ctx.cfg.m);
  else for (std::size_t i = 0; i < cases.size(); ++i) ms.push_back(std::uniform_int_distribution<int>(0, 50)(mrng));
  for (int m : ms) {
    if (m < 0 || m > 200) throw FieldError("m", "charsum needs 0 <= m <= 200");
  }
  struct Row {
    CharacterSumBound bound;
    std::string error;
  };
  const auto results = parallel_map(cases.size(), [&](std::size_t i) {
    Row row;
    try {
      row.bound = character_sum_bound(cases[i].first, cases[i].second, ms[i]);
    } catch (const NumericalError& e) {
      row.error = e.what();
    }
    return row;
  });
  rep.columns = {"case", "order", "dim", "m", "N", "orbit_sum", "invariant_sum", "rel_diff", "error"};
  double worst = 0.0;
  double min_value = std::numeric_limits<double>::infinity();
  int failures = 0;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto& b = results[i].bound;
    rep.add_row({static_cast<int>(i), cases[i].first.order(), cases[i].first.dim(), ms[i], ms[i], b.orbit_sum,
                 b.invariant_sum, b.relative_difference, results[i].error});
    if (!results[i].error.empty()) ++failures;
    worst = std::max(worst, b.relative_difference);
    min_value = std::min({min_value, b.orbit_sum, b.invariant_sum});
  }
  ctx.log << cases.size() << " cases, max relative difference " << sci(worst) << ", min value " << sci(min_value)
          << "\n";
  const double tol = ctx.tol(1e-10);
  rep.check("max_rel_diff", worst, tol, worst <= tol && failures == 0);
  rep.check("both_sides_positive", min_value, 0.0, min_value > 0.0);
}

inline void cmd_recover(Context& ctx) {
  const auto& model = ctx.need_model();
  std::vector<int> fallback;
  for (int m = 10; m <= 100; m += 10) fallback.push_back(ctx.bundle_round(m));
  const auto ms = ctx.powers(fallback);
  const double amp = ctx.cfg.amplitude != 0.0 ? ctx.cfg.amplitude : 0.1;
  const auto phi = RadialPotential::log_bump(amp, ctx.cfg.center, ctx.cfg.width);
  const auto grid = ctx.radial_grid();
  const auto curve = recover_potential(ctx.model, phi, ms, grid);
  auto& rep = ctx.report;
  rep.params["potential"] = curve.potential;
  rep.params["positivity_margin"] = curve.positivity_margin;
  rep.columns = {"m", "N", "sup_error", "worst_r"};
  for (const auto& p : curve.points) {
    rep.add_row({p.m, ctx.steps(p.m), p.sup_error, p.worst_r});
    ctx.log << "m=" << p.m << ": sup error " << sci(p.sup_error) << "\n";
  }
  (void)model;
  double worst_increase = 0.0;
  for (std::size_t i = 0; i + 1 < curve.points.size(); ++i) {
    if (curve.points[i].m < 20) continue;
    worst_increase = std::max(worst_increase, curve.points[i + 1].sup_error - curve.points[i].sup_error);
  }
  rep.check("non_increasing_from_m20", worst_increase, 0.0, worst_increase <= 0.0);
  const double last = curve.points.back().sup_error;
  const double tol = ctx.tol(0.02);
  rep.check("final_sup_error", last, tol, last < tol);
}

inline void cmd_lowerbound(Context& ctx) {
  const auto& model = ctx.need_model();
  const int step = model.bundle_step;
  const auto ms = ctx.powers(stepped(ctx.bundle_round(10), 200, step));
  const auto grid = ctx.radial_grid();
  const auto scan = lower_bound_scan(ctx.model, ms, grid);
  auto& rep = ctx.report;
  rep.columns = {"m", "N", "min_ratio", "max_ratio", "argmin_r"};
  for (const auto& row : scan.rows) rep.add_row({row.m, ctx.steps(row.m), row.min_ratio, row.max_ratio, row.argmin_r});
  ctx.log << "rho/(m+1)^n over " << grid.size() << " points: [" << fixed(scan.infimum) << ", " << fixed(scan.supremum)
          << "]\n";
  rep.params["infimum"] = scan.infimum;
  rep.params["supremum"] = scan.supremum;
  if (model.kind == ModelKind::football) {
    const double lo = ctx.tol(0.5);
    const double hi = model.football_order();
    rep.check("band_lower", scan.infimum, lo, scan.infimum >= lo);
    rep.check("band_upper", scan.supremum, hi, scan.supremum <= hi * (1.0 + 1e-9));
  } else {
    rep.check("band_lower_positive", scan.infimum, 0.0, scan.infimum > 0.0);
  }
}

inline void cmd_pullback(Context& ctx) {
  const auto& model = ctx.need_model();
  std::vector<int> fallback;
  for (int m : {10, 20, 40, 80}) fallback.push_back(ctx.bundle_round(m));
  const auto ms = ctx.powers(fallback);
  const auto pts = ctx.points({0.5, 1.0, 1.5, 2.0});
  const auto results = parallel_map(ms.size(), [&](std::size_t i) {
    return metric_pullback_deviation(build_section_space(ctx.model, ms[i]), pts);
  });
  auto& rep = ctx.report;
  rep.columns = {"m", "N", "r", "deviation"};
  for (const auto& res : results) {
    for (const auto& p : res.points) rep.add_row({res.m, ctx.steps(res.m), p.r, p.deviation});
    ctx.log << "m=" << res.m << ": max deviation " << sci(res.max_deviation) << "\n";
  }
  (void)model;
  double worst = 0.0;
  for (std::size_t i = 0; i + 1 < results.size(); ++i) {
    const double a = results[i].max_deviation;
    const double b = results[i + 1].max_deviation;
    worst = std::max(worst, a > 0.0 ? b / a : (b > 0.0 ? std::numeric_limits<double>::infinity() : 0.0));
  }
  const double tol = ctx.tol(0.75);
  rep.check("successive_ratio", worst, tol, worst <= tol);
}

inline void cmd_localmodel(Context& ctx) {
  const ModelGrid grid = [&] {
    try {
      return ModelGrid::make(ctx.cfg.X, ctx.cfg.nx, ctx.cfg.Q);
    } catch (const InvalidArgument& e) {
      throw FieldError("grid", e.what());
    }
  }();
  auto& rep = ctx.report;
  rep.model = nullptr;
  rep.params["X"] = grid.X;
  rep.params["nx"] = grid.nx;
  rep.params["Q"] = grid.Q;
  rep.params["seed"] = ctx.cfg.seed;
  auto suite = default_suite(grid, ctx.cfg.seed);
  suite.push_back({"negative_mode", from_modes(grid, {{-1, 1.0}, {1, 1.0}})});
  const auto report = check_identities(grid, suite);
  rep.columns = {"function", "d0_residual", "adjoint_residual", "norm_defect", "band_limited", "out_of_cone"};
  double max_d0 = 0.0, max_adj = 0.0;
  ctx.log << "function            |D0 R f|/|f|   |R*R f - f|/|f|\n";
  for (const auto& row : report.rows) {
    std::string cone;
    for (int e : row.out_of_cone) cone += (cone.empty() ? "" : " ") + std::to_string(e);
    rep.add_row({row.label, row.d0_residual, row.adjoint_residual, row.norm_defect, row.band_limited, cone});
    char line[160];
    std::snprintf(line, sizeof line, "%-18s  %.3e      %.3e%s\n", row.label.c_str(), row.d0_residual,
                  row.adjoint_residual, cone.empty() ? "" : ("  (outside cone: " + cone + ")").c_str());
    ctx.log << line;
    max_d0 = std::max(max_d0, row.d0_residual);
    max_adj = std::max(max_adj, row.adjoint_residual);
  }
  const auto conv = d0_convergence(grid, 2);
  rep.params["convergence"] = {{"mode", conv.mode}, {"coarse", conv.coarse}, {"fine", conv.fine},
                               {"ratio", conv.ratio()}};
  ctx.log << "h-halving ratio (mode 2): " << fixed(conv.ratio(), 3) << "\n";
  const double tol = ctx.tol(1e-6);
  rep.check("D0R_residual", max_d0, tol, max_d0 < tol);
  rep.check("RstarR_residual", max_adj, tol, max_adj < tol);
  rep.check("fourth_order_ratio", conv.ratio(), 16.0, conv.ratio() >= 8.0 && conv.ratio() <= 32.0, "within 2x of 16");
  const bool flagged = !report.rows.back().out_of_cone.empty();
  rep.check("negative_mode_flagged", flagged ? 1.0 : 0.0, 1.0, flagged);
}

inline void cmd_phase(Context& ctx) {
  const auto data = phase_critical_data();
  auto& rep = ctx.report;
  rep.model = nullptr;
  rep.columns = {"quantity", "closed_form_re", "closed_form_im", "finite_difference_re", "finite_difference_im"};
  auto add = [&](const std::string& name, cplx a, cplx b) { rep.add_row({name, a.real(), a.imag(), b.real(), b.imag()}); };
  add("dPsi/dt", data.gradient[0], data.gradient_fd[0]);
  add("dPsi/dtheta", data.gradient[1], data.gradient_fd[1]);
  add("Psi_tt", data.hessian[0][0], data.hessian_fd[0][0]);
  add("Psi_ttheta", data.hessian[0][1], data.hessian_fd[0][1]);
  add("Psi_thetatheta", data.hessian[1][1], data.hessian_fd[1][1]);
  add("det", data.determinant, data.hessian_fd[0][0] * data.hessian_fd[1][1] - data.hessian_fd[0][1] * data.hessian_fd[1][0]);
  const double grad = std::max(std::abs(data.gradient_fd[0]), std::abs(data.gradient_fd[1]));
  const std::array<std::array<cplx, 2>, 2> expected{{{0.0, 1.0}, {1.0, cplx(0.0, 1.0)}}};
  double hess = 0.0;
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) hess = std::max(hess, std::abs(data.hessian_fd[a][b] - expected[a][b]));
  }
  const double det_err = std::abs(data.determinant - cplx(-1.0, 0.0));
  ctx.log << "critical point (1, 0): |grad| " << sci(grad) << ", Hessian error " << sci(hess) << ", det "
          << data.determinant.real() << "\n";
  rep.check("gradient_vanishes", grad, ctx.tol(1e-10), grad <= ctx.tol(1e-10));
  rep.check("hessian_matches", hess, 1e-6, hess <= 1e-6);
  rep.check("det_equals_-1", det_err, 1e-12, det_err <= 1e-12 && data.nondegenerate);
  rep.check("im_psi_nonnegative", data.min_imaginary, 0.0, data.min_imaginary >= -1e-15);
  const auto off = phase_gradient(1.0, 0.1);
  rep.check("gradient_nonzero_off_critical", std::abs(off[1]), 0.0, std::abs(off[1]) > 0.0);
}

inline const std::map<std::string, void (*)(Context&)>& dispatch() {
  static const std::map<std::string, void (*)(Context&)> table{
      {"density", cmd_density},   {"split", cmd_split},       {"fit", cmd_fit},           {"decay", cmd_decay},
      {"pairing", cmd_pairing},   {"bcoef", cmd_bcoef},       {"rrk", cmd_rrk},           {"charsum", cmd_charsum},
      {"recover", cmd_recover},   {"lowerbound", cmd_lowerbound}, {"pullback", cmd_pullback},
      {"localmodel", cmd_localmodel}, {"phase", cmd_phase}};
  return table;
}

}  // namespace detail

/// Runs one command into a report; library and validation errors propagate.
inline Report execute(const RunConfig& cfg, std::ostream& log) {
  validate(cfg);
  const auto& table = detail::dispatch();
  const auto it = table.find(cfg.command);
  if (it == table.end()) throw FieldError("command", "unknown command '" + cfg.command + "'");
  detail::Context ctx{cfg, log, {}, std::nullopt, nullptr};
  ctx.report.command = cfg.command;
  const bool needs_model = cfg.command != "localmodel" && cfg.command != "phase" &&
                           !(cfg.command == "charsum" && cfg.model.empty());
  if (needs_model) ctx.need_model();
  it->second(ctx);
  return std::move(ctx.report);
}

inline std::string output_path(const RunConfig& cfg) {
  return cfg.out.empty() ? cfg.command + "_report." + cfg.format : cfg.out;
}

inline void write_report(const RunConfig& cfg, const Report& report) {
  const std::string path = output_path(cfg);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FieldError("out", "cannot open " + path);
  out << (cfg.format == "csv" ? report.to_csv() : report.to_json().dump(2) + "\n");
  if (cfg.gnuplot) {
    std::ofstream gp(path + ".gp", std::ios::binary);
    if (!gp) throw FieldError("out", "cannot open " + path + ".gp");
    gp << report.gnuplot();
  }
}

inline std::string summary_line(const Report& report) {
  std::string line = report.command + ": " + (report.pass() ? "PASS" : "FAIL");
  for (const auto& c : report.checks) {
    if (!c.pass || report.pass()) {
      line += " [" + c.name + "=" + Report::format_cell(c.value) + (c.pass ? "" : " FAILED") + "]";
    }
  }
  return line;
}

/// Executes, writes the report and prints the summary; returns the exit code.
inline int run(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    const Report report = execute(cfg, out);
    write_report(cfg, report);
    out << summary_line(report) << "\n";
    return report.pass() ? 0 : 1;
  } catch (const FieldError& e) {
    err << "error: invalid " << e.what() << "\n";
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
  }
  out << cfg.command << ": FAIL\n";
  return 1;
}

inline int main(int argc, char** argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  if (argc < 2) {
    err << usage();
    return 2;
  }
  const std::string command = argv[1];
  const auto& cmds = commands();
  if (std::find(cmds.begin(), cmds.end(), command) == cmds.end()) {
    if (command == "--help" || command == "-h") {
      out << usage();
      return 0;
    }
    err << "unknown command '" << command << "'\n" << usage();
    return 2;
  }

  RunConfig cfg;
  cfg.command = command;
  CLI::App app{"orbk " + command};
  app.add_option("--model", cfg.model, "model: inline JSON, JSON file, or football|wpl");
  app.add_option("--n", cfg.n, "football order");
  app.add_option("--d", cfg.d, "weighted line weights d0 d1")->expected(2);
  app.add_option("--m", cfg.m, "single power m of the ample generator");
  app.add_option("--m-range", cfg.m_range, "powers start:stop:step (inclusive)");
  app.add_option("--r", cfg.r, "chart radial coordinate(s) r = |z|^2");
  app.add_option("--chart", cfg.chart, "chart id");
  app.add_option("--grid", cfg.grid, "radial grid lo:hi:count");
  app.add_option("--terms", cfg.terms, "expansion terms R");
  app.add_option("--amplitude", cfg.amplitude, "test function or potential amplitude");
  app.add_option("--support", cfg.support, "test function support radius");
  app.add_option("--center", cfg.center, "potential bump center in r");
  app.add_option("--width", cfg.width, "potential bump half width in log r");
  app.add_option("--seed", cfg.seed, "seed for randomized cases");
  app.add_option("--cases", cfg.cases, "number of randomized cases");
  app.add_option("--tol,--tolerance", cfg.tolerance, "primary tolerance of the command");
  app.add_option("--out", cfg.out, "report path");
  app.add_option("--format", cfg.format, "csv or json");
  app.add_flag("--gnuplot", cfg.gnuplot, "also write a gnuplot script");
  app.add_option("--nx", cfg.nx, "local model x points");
  app.add_option("--Q", cfg.Q, "local model y points");
  app.add_option("--X", cfg.X, "local model half width");
  app.add_option("--config", cfg.config, "JSON config overriding flags");
  try {
    app.parse(argc - 1, argv + 1);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: invalid arguments: " << e.what() << "\n";
    return 1;
  }
  if (!cfg.config.empty()) {
    try {
      std::ifstream in(cfg.config);
      if (!in) throw FieldError("config", "cannot open " + cfg.config);
      json j;
      try {
        j = json::parse(in);
      } catch (const json::exception& e) {
        throw FieldError("config", std::string("invalid JSON: ") + e.what());
      }
      apply_config(cfg, j);
    } catch (const FieldError& e) {
      err << "error: invalid " << e.what() << "\n";
      return 1;
    }
    if (cfg.command != command && std::find(cmds.begin(), cmds.end(), cfg.command) == cmds.end()) {
      err << "unknown command '" << cfg.command << "'\n" << usage();
      return 2;
    }
  }
  return run(cfg, out, err);
}

}  // namespace orbk::cli
