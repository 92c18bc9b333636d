#include "relax/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "relax/numeric.hpp"

namespace relax {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

const std::vector<std::string> kCommands = {"geometry",  "prc-singular", "prc-numeric",
                                            "prc-infinitesimal", "sweep", "isochrones", "plot"};

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.15g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

struct CsvWriter::Impl {
  std::ofstream out;
};

CsvWriter::CsvWriter(const std::string& path) : impl_(new Impl) {
  impl_->out.open(path, std::ios::binary);
  if (!impl_->out) throw Error("io_error", "cannot open for writing: " + path);
}

CsvWriter::~CsvWriter() { delete impl_; }

void CsvWriter::row(const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    const std::string& f = fields[i];
    const bool quote = f.find_first_of(",\"\n\r") != std::string::npos;
    if (i) impl_->out << ',';
    if (quote) {
      impl_->out << '"';
      for (char c : f) {
        if (c == '"') impl_->out << '"';
        impl_->out << c;
      }
      impl_->out << '"';
    } else {
      impl_->out << f;
    }
  }
  impl_->out << '\n';
}

namespace {

void write_meta(const fs::path& csv_path, json meta) {
  std::ofstream out(csv_path.string() + ".meta.json", std::ios::binary);
  out << meta.dump(2) << "\n";
}

std::vector<std::pair<double, double>> read_xy_csv(const fs::path& path) {
  std::ifstream in(path);
  std::vector<std::pair<double, double>> pts;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (header) {
      header = false;
      continue;
    }
    std::istringstream is(line);
    std::string a, b;
    if (!std::getline(is, a, ',') || !std::getline(is, b, ',')) continue;
    try {
      pts.emplace_back(std::stod(a), std::stod(b));
    } catch (...) {
      // skip non-numeric rows
    }
  }
  return pts;
}

}  // namespace

// ---------------------------------------------------------------------------
// SVG
// ---------------------------------------------------------------------------

namespace {

double nice_step(double span) {
  const double raw = span / 6.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (raw <= m * mag) return m * mag;
  }
  return 10.0 * mag;
}

std::string fmt_tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v == 0.0 ? 0.0 : v);
  return buf;
}

}  // namespace

void write_svg_plot(const std::string& path, const std::string& title,
                    const std::string& x_label, const std::string& y_label,
                    const std::vector<PlotSeries>& series) {
  double x_lo = 0.0, x_hi = 1.0, y_lo = 0.0, y_hi = 1.0;
  bool first = true;
  for (const auto& s : series) {
    for (const auto& [x, y] : s.points) {
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      if (first) {
        x_lo = x_hi = x;
        y_lo = y_hi = y;
        first = false;
      } else {
        x_lo = std::min(x_lo, x);
        x_hi = std::max(x_hi, x);
        y_lo = std::min(y_lo, y);
        y_hi = std::max(y_hi, y);
      }
    }
  }
  if (x_hi - x_lo < 1e-12) x_hi = x_lo + 1.0;
  if (y_hi - y_lo < 1e-12) {
    y_lo -= 0.5;
    y_hi += 0.5;
  }
  const double pad_y = 0.06 * (y_hi - y_lo);
  y_lo -= pad_y;
  y_hi += pad_y;

  const double W = 720, H = 480, ml = 64, mr = 20, mt = 36, mb = 52;
  const double pw = W - ml - mr, ph = H - mt - mb;
  const auto px = [&](double x) { return ml + (x - x_lo) / (x_hi - x_lo) * pw; };
  const auto py = [&](double y) { return mt + (y_hi - y) / (y_hi - y_lo) * ph; };

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("io_error", "cannot open for writing: " + path);
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << W
      << "\" height=\"" << H << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
  out << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
  out << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\""
      << " font-size=\"15\">" << title << "</text>\n";

  // axes box and ticks
  out << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  const double sx = nice_step(x_hi - x_lo);
  for (double t = std::ceil(x_lo / sx) * sx; t <= x_hi + 1e-12; t += sx) {
    out << "<line x1=\"" << px(t) << "\" y1=\"" << mt + ph << "\" x2=\"" << px(t) << "\" y2=\""
        << mt + ph + 5 << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << px(t) << "\" y=\"" << mt + ph + 20
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << fmt_tick(t)
        << "</text>\n";
  }
  const double sy = nice_step(y_hi - y_lo);
  for (double t = std::ceil(y_lo / sy) * sy; t <= y_hi + 1e-12; t += sy) {
    out << "<line x1=\"" << ml - 5 << "\" y1=\"" << py(t) << "\" x2=\"" << ml << "\" y2=\""
        << py(t) << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << ml - 8 << "\" y=\"" << py(t) + 4
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << fmt_tick(t)
        << "</text>\n";
  }
  out << "<text x=\"" << ml + pw / 2 << "\" y=\"" << H - 14
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" << x_label
      << "</text>\n";
  out << "<text x=\"18\" y=\"" << mt + ph / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\""
      << " transform=\"rotate(-90 18 " << mt + ph / 2 << ")\">" << y_label << "</text>\n";

  const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
  int ci = 0;
  double legend_y = mt + 16;
  for (const auto& s : series) {
    const char* color = colors[ci % 5];
    ++ci;
    if (s.style == PlotSeries::Style::Dots) {
      for (const auto& [x, y] : s.points) {
        if (!std::isfinite(y)) continue;
        out << "<circle cx=\"" << px(x) << "\" cy=\"" << py(y) << "\" r=\"2.4\" fill=\"" << color
            << "\"/>\n";
      }
    } else {
      // split polylines at jumps so discontinuities stay visible
      std::vector<std::vector<std::pair<double, double>>> runs(1);
      for (std::size_t i = 0; i < s.points.size(); ++i) {
        const auto& p = s.points[i];
        if (!std::isfinite(p.second)) {
          if (!runs.back().empty()) runs.emplace_back();
          continue;
        }
        if (!runs.back().empty() && std::abs(p.second - runs.back().back().second) > 1.0)
          runs.emplace_back();
        runs.back().push_back(p);
      }
      for (const auto& r : runs) {
        if (r.size() < 2) continue;
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.6\"";
        if (s.style == PlotSeries::Style::DashedLine) out << " stroke-dasharray=\"6 4\"";
        out << " points=\"";
        for (const auto& [x, y] : r) out << px(x) << "," << py(y) << " ";
        out << "\"/>\n";
      }
    }
    out << "<text x=\"" << ml + pw - 8 << "\" y=\"" << legend_y
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\" fill=\"" << color
        << "\">" << s.label << "</text>\n";
    legend_y += 16;
  }
  out << "</svg>\n";
}

// ---------------------------------------------------------------------------
// command driver
// ---------------------------------------------------------------------------

namespace {

json model_meta(const RunConfig& cfg) {
  json m;
  m["family"] = cfg.model.family;
  if (cfg.model.family == "fhn") {
    m["a"] = cfg.model.a;
    m["b"] = cfg.model.b;
  } else {
    m["f_coeffs"] = cfg.model.f_coeffs;
    m["g_x_coeffs"] = cfg.model.g_x_coeffs;
    m["g_z"] = cfg.model.g_z;
  }
  m["I"] = cfg.model.current;
  return m;
}

void write_prc_rows(const fs::path& path, const PrcCurve& curve,
                    const std::vector<double>& shifts) {
  CsvWriter csv(path.string());
  csv.row({"theta", "shift", "method", "epsilon"});
  for (std::size_t i = 0; i < curve.samples.size(); ++i)
    csv.row({format_number(curve.samples[i].theta), format_number(shifts[i]), curve.method,
             format_number(curve.epsilon)});
}

void write_prc_csv(const fs::path& path, const PrcCurve& curve, const RunConfig& cfg,
                   const std::string& command) {
  std::vector<double> wrapped, unwrapped;
  for (const auto& s : curve.samples) {
    wrapped.push_back(s.shift);
    if (unwrapped.empty()) {
      unwrapped.push_back(s.shift);
    } else {
      // continuity-preserving lift: stay within pi of the previous sample
      unwrapped.push_back(s.shift +
                          kTwoPi * std::round((unwrapped.back() - s.shift) / kTwoPi));
    }
  }
  write_prc_rows(path, curve, wrapped);
  fs::path upath = path;
  upath.replace_extension();
  upath += "_unwrapped.csv";
  write_prc_rows(upath, curve, unwrapped);

  json meta;
  meta["command"] = command;
  meta["columns"] = {"theta", "shift", "method", "epsilon"};
  meta["method"] = curve.method;
  meta["epsilon"] = curve.epsilon;
  meta["input"] = input_label(curve.input);
  meta["unwrapped_file"] = upath.filename().string();
  meta["model"] = model_meta(cfg);
  write_meta(path, meta);
}

double require_scalar_epsilon(const RunConfig& cfg) {
  if (!cfg.model.epsilon) throw ValidationError("model.epsilon");
  return *cfg.model.epsilon;
}

CycleOptions cycle_options(const RunConfig& cfg) {
  CycleOptions c;
  c.tol = cfg.ode_tolerances();
  c.transient_periods = cfg.numerics.transient_periods;
  c.model = cfg.model_options();
  return c;
}

ShiftOptions shift_options(const RunConfig& cfg) {
  ShiftOptions s;
  s.tol = cfg.ode_tolerances();
  s.horizon_periods = cfg.numerics.horizon_periods;
  return s;
}

}  // namespace

void run(const RunConfig& cfg, const std::string& command, const RunOptions& opts) {
  if (std::find(kCommands.begin(), kCommands.end(), command) == kCommands.end())
    throw ValidationError("command");
  const fs::path out_dir = opts.out_dir.empty() ? cfg.output.dir : opts.out_dir;
  fs::create_directories(out_dir);

  const ModelOptions mopts = cfg.model_options();
  const auto make_orbit = [&]() {
    const FastSlowSystem sys0 = cfg.system(0.0);
    return build_orbit(fold_points(sys0, mopts));
  };

  if (command == "geometry") {
    const SingularOrbit orbit = make_orbit();
    const auto& g = orbit.geom;
    const fs::path path = out_dir / "geometry.csv";
    CsvWriter csv(path.string());
    csv.row({"quantity", "value"});
    const auto put = [&](const char* k, double v) { csv.row({k, format_number(v)}); };
    put("lower_fold_x", g.lower_fold.x);
    put("lower_fold_z", g.lower_fold.z);
    put("upper_fold_x", g.upper_fold.x);
    put("upper_fold_z", g.upper_fold.z);
    put("landing_from_lower_fold_x", branch_solve(g, g.lower_fold.z, Branch::Upper));
    put("landing_from_lower_fold_z", g.lower_fold.z);
    put("landing_from_upper_fold_x", branch_solve(g, g.upper_fold.z, Branch::Lower));
    put("landing_from_upper_fold_z", g.upper_fold.z);
    put("period_slow", orbit.period_slow);
    put("theta_plus", orbit.theta_plus);
    put("omega_slow", orbit.omega_slow);
    json meta;
    meta["command"] = command;
    meta["columns"] = {"quantity", "value"};
    meta["model"] = model_meta(cfg);
    write_meta(path, meta);
    return;
  }

  if (command == "prc-singular") {
    const SingularOrbit orbit = make_orbit();
    const InputSignal input = cfg.input_signal(orbit.period_slow);
    const PrcCurve curve =
        singular_prc(orbit, input, static_cast<std::size_t>(cfg.numerics.n_samples));
    write_prc_csv(out_dir / "prc_singular.csv", curve, cfg, command);
    return;
  }

  if (command == "prc-numeric") {
    const double eps = require_scalar_epsilon(cfg);
    const SingularOrbit orbit = make_orbit();
    const InputSignal input = cfg.input_signal(orbit.period_slow);
    const FastSlowSystem sys = cfg.system(eps);
    const LimitCycle cycle = find_limit_cycle(sys, cycle_options(cfg));
    const PrcCurve curve =
        numeric_prc(sys, cycle, input, static_cast<std::size_t>(cfg.numerics.n_samples),
                    opts.threads, shift_options(cfg));
    write_prc_csv(out_dir / "prc_numeric.csv", curve, cfg, command);
    return;
  }

  if (command == "prc-infinitesimal") {
    const double eps = require_scalar_epsilon(cfg);
    const SingularOrbit orbit = make_orbit();
    const InputSignal input = cfg.input_signal(orbit.period_slow);
    const FastSlowSystem sys = cfg.system(eps);
    const LimitCycle cycle = find_limit_cycle(sys, cycle_options(cfg));
    const Iprc iprc = adjoint_iprc(sys, cycle, static_cast<std::size_t>(cfg.numerics.iprc_samples),
                                   cfg.ode_tolerances());
    const PrcCurve curve = convolve_iprc(iprc, input);
    write_prc_csv(out_dir / "prc_infinitesimal.csv", curve, cfg, command);
    return;
  }

  if (command == "sweep") {
    if (cfg.model.epsilon_list.size() < 3) throw ValidationError("model.epsilon_list");
    const SingularOrbit orbit = make_orbit();
    const InputSignal input = cfg.input_signal(orbit.period_slow);
    SweepOptions so;
    so.n_samples = static_cast<std::size_t>(cfg.numerics.n_samples);
    so.iprc_samples = static_cast<std::size_t>(cfg.numerics.iprc_samples);
    so.exclusion_band = cfg.numerics.exclusion_band;
    so.threads = opts.threads;
    so.shift = shift_options(cfg);
    so.cycle = cycle_options(cfg);
    so.model = mopts;
    const SweepReport report = error_sweep(cfg.system(0.0), cfg.model.epsilon_list, input, so);

    const fs::path path = out_dir / "sweep.csv";
    CsvWriter csv(path.string());
    csv.row({"epsilon", "sup_error_singular", "sup_error_infinitesimal", "beta_hat"});
    for (std::size_t i = 0; i < report.entries.size(); ++i) {
      const auto& e = report.entries[i];
      const bool last = i + 1 == report.entries.size();
      csv.row({format_number(e.epsilon), format_number(e.sup_error_singular),
               format_number(e.sup_error_infinitesimal),
               last ? format_number(report.beta_hat) : ""});
    }
    json meta;
    meta["command"] = command;
    meta["columns"] = {"epsilon", "sup_error_singular", "sup_error_infinitesimal", "beta_hat"};
    meta["input"] = input_label(input);
    meta["exclusion_band"] = report.band;
    meta["excluded_phases"] = report.excluded_phases;
    meta["beta_hat"] = report.beta_hat;
    json per_eps = json::array();
    for (const auto& e : report.entries) {
      json je;
      je["epsilon"] = e.epsilon;
      je["period_fast"] = e.period_fast;
      je["period_slow"] = e.period_slow;
      je["anchor_z_gap"] = e.anchor_z_gap;
      per_eps.push_back(je);
    }
    meta["cycles"] = per_eps;
    meta["model"] = model_meta(cfg);
    write_meta(path, meta);
    return;
  }

  if (command == "isochrones") {
    const SingularOrbit orbit = make_orbit();
    const auto& g = orbit.geom;
    const double dz = g.upper_fold.z - g.lower_fold.z;
    const double z_lo = g.lower_fold.z - 0.3 * dz;
    const double z_hi = g.upper_fold.z + 0.3 * dz;
    const double x_lo = branch_solve(g, g.upper_fold.z, Branch::Lower) - 0.6;
    const double x_hi = branch_solve(g, g.lower_fold.z, Branch::Upper) + 0.6;
    const int n = cfg.numerics.grid_n;
    const fs::path path = out_dir / "isochrones.csv";
    CsvWriter csv(path.string());
    csv.row({"x", "z", "theta"});
    for (int i = 0; i < n; ++i) {
      const double x = x_lo + (x_hi - x_lo) * i / (n - 1.0);
      for (int j = 0; j < n; ++j) {
        const double z = z_lo + (z_hi - z_lo) * j / (n - 1.0);
        double theta = std::numeric_limits<double>::quiet_NaN();
        try {
          theta = phase_of(orbit, x, z).radians();
        } catch (const Error&) {
          // on the separatrix or outside the computed domain
        }
        csv.row({format_number(x), format_number(z), format_number(theta)});
      }
    }
    json meta;
    meta["command"] = command;
    meta["columns"] = {"x", "z", "theta"};
    meta["window"] = {{"x", {x_lo, x_hi}}, {"z", {z_lo, z_hi}}, {"grid_n", n}};
    meta["model"] = model_meta(cfg);
    write_meta(path, meta);
    return;
  }

  // plot: overlay whatever PRC data files are present
  std::vector<PlotSeries> series;
  const auto add = [&](const char* file, const char* label, PlotSeries::Style style) {
    const fs::path p = out_dir / file;
    if (!fs::exists(p)) return;
    PlotSeries s;
    s.label = label;
    s.style = style;
    s.points = read_xy_csv(p);
    if (!s.points.empty()) series.push_back(std::move(s));
  };
  add("prc_singular.csv", "singular", PlotSeries::Style::Line);
  add("prc_infinitesimal.csv", "infinitesimal", PlotSeries::Style::DashedLine);
  add("prc_numeric.csv", "numeric", PlotSeries::Style::Dots);
  if (series.empty()) throw ValidationError("plot: no PRC data files in output directory");
  write_svg_plot((out_dir / "fig_prc.svg").string(), "phase response curves", "theta (rad)",
                 "phase shift (rad)", series);
}

}  // namespace relax
