#include "relax/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

namespace relax {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_number(const std::string& tok, int line) {
  const char* begin = tok.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end != begin + tok.size() || tok.empty())
    throw ParseError("line " + std::to_string(line) + ": not a number: '" + tok + "'");
  return v;
}

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

struct RawValue {
  std::string text;
  int line = 0;
};

using Section = std::map<std::string, RawValue>;

struct RawConfig {
  std::map<std::string, Section> sections;

  bool has(const std::string& sec) const { return sections.count(sec) > 0; }

  const RawValue* find(const std::string& sec, const std::string& key) const {
    auto s = sections.find(sec);
    if (s == sections.end()) return nullptr;
    auto k = s->second.find(key);
    return k == s->second.end() ? nullptr : &k->second;
  }
};

RawConfig tokenize(const std::string& text) {
  static const std::map<std::string, std::vector<std::string>> kSchema = {
      {"model",
       {"family", "a", "b", "I", "f_coeffs", "g_x_coeffs", "g_z", "epsilon", "epsilon_list"}},
      {"input", {"kind", "alpha", "u_bar", "duration"}},
      {"numerics",
       {"rel_tol", "abs_tol", "quad_tol", "root_tol", "separatrix_tol", "x_max", "fold_offset",
        "exclusion_band", "transient_periods", "n_samples", "iprc_samples", "horizon_periods",
        "grid_n"}},
      {"output", {"dir"}}};

  RawConfig raw;
  std::istringstream is(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ParseError("line " + std::to_string(lineno) + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (kSchema.find(section) == kSchema.end()) throw ValidationError(section);
      raw.sections[section];  // section may legitimately be empty
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError("line " + std::to_string(lineno) + ": expected key = value");
    if (section.empty())
      throw ParseError("line " + std::to_string(lineno) + ": key outside any [section]");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto& keys = kSchema.at(section);
    if (std::find(keys.begin(), keys.end(), key) == keys.end())
      throw ValidationError(section + "." + key);
    auto [it, inserted] = raw.sections[section].emplace(key, RawValue{value, lineno});
    if (!inserted)
      throw ParseError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
  }
  return raw;
}

double get_number(const RawConfig& raw, const std::string& sec, const std::string& key,
                  bool required, double fallback) {
  const RawValue* v = raw.find(sec, key);
  if (!v) {
    if (required) throw ValidationError(sec + "." + key);
    return fallback;
  }
  return parse_number(v->text, v->line);
}

std::vector<double> get_list(const RawConfig& raw, const std::string& sec, const std::string& key) {
  const RawValue* v = raw.find(sec, key);
  if (!v) return {};
  std::vector<double> out;
  for (const auto& tok : split_ws(v->text)) out.push_back(parse_number(tok, v->line));
  return out;
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  const RawConfig raw = tokenize(text);
  RunConfig cfg;

  if (!raw.has("model")) throw ValidationError("model");
  const RawValue* fam = raw.find("model", "family");
  if (!fam) throw ValidationError("model.family");
  cfg.model.family = fam->text;
  if (cfg.model.family == "fhn") {
    cfg.model.a = get_number(raw, "model", "a", true, 0.0);
    cfg.model.b = get_number(raw, "model", "b", true, 0.0);
    cfg.model.current = get_number(raw, "model", "I", true, 0.0);
    for (const char* k : {"f_coeffs", "g_x_coeffs", "g_z"})
      if (raw.find("model", k)) throw ValidationError(std::string("model.") + k);
  } else if (cfg.model.family == "poly") {
    cfg.model.f_coeffs = get_list(raw, "model", "f_coeffs");
    cfg.model.g_x_coeffs = get_list(raw, "model", "g_x_coeffs");
    if (cfg.model.f_coeffs.empty()) throw ValidationError("model.f_coeffs");
    if (cfg.model.g_x_coeffs.empty()) throw ValidationError("model.g_x_coeffs");
    cfg.model.g_z = get_number(raw, "model", "g_z", true, 0.0);
    cfg.model.current = get_number(raw, "model", "I", true, 0.0);
    for (const char* k : {"a", "b"})
      if (raw.find("model", k)) throw ValidationError(std::string("model.") + k);
  } else {
    throw ValidationError("model.family");
  }
  if (raw.find("model", "epsilon") && raw.find("model", "epsilon_list"))
    throw ValidationError("model.epsilon_list");
  if (raw.find("model", "epsilon"))
    cfg.model.epsilon = get_number(raw, "model", "epsilon", false, 0.0);
  cfg.model.epsilon_list = get_list(raw, "model", "epsilon_list");
  if (cfg.model.epsilon && !(*cfg.model.epsilon > 0.0)) throw ValidationError("model.epsilon");
  for (double e : cfg.model.epsilon_list)
    if (!(e > 0.0)) throw ValidationError("model.epsilon_list");

  if (raw.has("input")) {
    InputConfig in;
    const RawValue* kind = raw.find("input", "kind");
    if (!kind) throw ValidationError("input.kind");
    in.kind = kind->text;
    if (in.kind == "impulse") {
      in.alpha = get_number(raw, "input", "alpha", true, 0.0);
      for (const char* k : {"u_bar", "duration"})
        if (raw.find("input", k)) throw ValidationError(std::string("input.") + k);
    } else if (in.kind == "pulse") {
      in.u_bar = get_number(raw, "input", "u_bar", true, 0.0);
      const RawValue* dur = raw.find("input", "duration");
      if (!dur) throw ValidationError("input.duration");
      const auto toks = split_ws(dur->text);
      if (toks.empty() || toks.size() > 2)
        throw ParseError("line " + std::to_string(dur->line) + ": malformed duration");
      in.duration.value = parse_number(toks[0], dur->line);
      if (toks.size() == 2) {
        if (toks[1] == "period")
          in.duration.period_fraction = true;
        else if (toks[1] == "slow")
          in.duration.period_fraction = false;
        else
          throw ParseError("line " + std::to_string(dur->line) + ": duration unit must be 'period' or 'slow'");
      }
      if (in.duration.value < 0.0) throw ValidationError("input.duration");
      if (raw.find("input", "alpha")) throw ValidationError("input.alpha");
    } else {
      throw ValidationError("input.kind");
    }
    cfg.input = in;
  }

  NumericsConfig& nm = cfg.numerics;
  nm.rel_tol = get_number(raw, "numerics", "rel_tol", false, nm.rel_tol);
  nm.abs_tol = get_number(raw, "numerics", "abs_tol", false, nm.abs_tol);
  nm.quad_tol = get_number(raw, "numerics", "quad_tol", false, nm.quad_tol);
  nm.root_tol = get_number(raw, "numerics", "root_tol", false, nm.root_tol);
  nm.separatrix_tol = get_number(raw, "numerics", "separatrix_tol", false, nm.separatrix_tol);
  nm.x_max = get_number(raw, "numerics", "x_max", false, nm.x_max);
  nm.fold_offset = get_number(raw, "numerics", "fold_offset", false, nm.fold_offset);
  nm.exclusion_band = get_number(raw, "numerics", "exclusion_band", false, nm.exclusion_band);
  nm.transient_periods =
      get_number(raw, "numerics", "transient_periods", false, nm.transient_periods);
  nm.n_samples = static_cast<int>(get_number(raw, "numerics", "n_samples", false, nm.n_samples));
  nm.iprc_samples =
      static_cast<int>(get_number(raw, "numerics", "iprc_samples", false, nm.iprc_samples));
  nm.horizon_periods =
      static_cast<int>(get_number(raw, "numerics", "horizon_periods", false, nm.horizon_periods));
  nm.grid_n = static_cast<int>(get_number(raw, "numerics", "grid_n", false, nm.grid_n));
  if (nm.n_samples < 0 || nm.iprc_samples <= 0 || nm.horizon_periods <= 0 || nm.grid_n <= 1)
    throw ValidationError("numerics");

  if (const RawValue* dir = raw.find("output", "dir")) cfg.output.dir = dir->text;
  if (cfg.output.dir.empty()) throw ValidationError("output.dir");
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file: " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return parse_config(os.str());
}

FastSlowSystem RunConfig::system(double epsilon) const {
  if (model.family == "fhn")
    return FastSlowSystem::fitzhugh_nagumo(model.a, model.b, model.current, epsilon);
  return FastSlowSystem::polynomial(Polynomial(model.f_coeffs), Polynomial(model.g_x_coeffs),
                                    model.g_z, model.current, epsilon);
}

ModelOptions RunConfig::model_options() const {
  ModelOptions mo;
  mo.x_max = numerics.x_max;
  mo.root_residual_tol = numerics.root_tol;
  mo.separatrix_tol = numerics.separatrix_tol;
  mo.quad_tol = numerics.quad_tol;
  mo.fold_offset = numerics.fold_offset;
  return mo;
}

OdeTolerances RunConfig::ode_tolerances() const { return {numerics.rel_tol, numerics.abs_tol}; }

InputSignal RunConfig::input_signal(double period_slow) const {
  if (!input) throw ValidationError("input");
  if (input->kind == "impulse") return Impulse{input->alpha};
  return SquarePulse{input->u_bar, input->duration.resolve(period_slow)};
}

std::string RunConfig::dump() const {
  std::ostringstream os;
  os.precision(17);
  os << "[model]\n";
  os << "family = " << model.family << "\n";
  if (model.family == "fhn") {
    os << "a = " << model.a << "\n";
    os << "b = " << model.b << "\n";
  } else {
    os << "f_coeffs =";
    for (double c : model.f_coeffs) os << " " << c;
    os << "\n";
    os << "g_x_coeffs =";
    for (double c : model.g_x_coeffs) os << " " << c;
    os << "\n";
    os << "g_z = " << model.g_z << "\n";
  }
  os << "I = " << model.current << "\n";
  if (model.epsilon) os << "epsilon = " << *model.epsilon << "\n";
  if (!model.epsilon_list.empty()) {
    os << "epsilon_list =";
    for (double e : model.epsilon_list) os << " " << e;
    os << "\n";
  }
  if (input) {
    os << "\n[input]\n";
    os << "kind = " << input->kind << "\n";
    if (input->kind == "impulse") {
      os << "alpha = " << input->alpha << "\n";
    } else {
      os << "u_bar = " << input->u_bar << "\n";
      os << "duration = " << input->duration.value
         << (input->duration.period_fraction ? " period" : " slow") << "\n";
    }
  }
  os << "\n[numerics]\n";
  os << "rel_tol = " << numerics.rel_tol << "\n";
  os << "abs_tol = " << numerics.abs_tol << "\n";
  os << "quad_tol = " << numerics.quad_tol << "\n";
  os << "root_tol = " << numerics.root_tol << "\n";
  os << "separatrix_tol = " << numerics.separatrix_tol << "\n";
  os << "x_max = " << numerics.x_max << "\n";
  os << "fold_offset = " << numerics.fold_offset << "\n";
  os << "exclusion_band = " << numerics.exclusion_band << "\n";
  os << "transient_periods = " << numerics.transient_periods << "\n";
  os << "n_samples = " << numerics.n_samples << "\n";
  os << "iprc_samples = " << numerics.iprc_samples << "\n";
  os << "horizon_periods = " << numerics.horizon_periods << "\n";
  os << "grid_n = " << numerics.grid_n << "\n";
  os << "\n[output]\n";
  os << "dir = " << output.dir << "\n";
  return os.str();
}

}  // namespace relax
