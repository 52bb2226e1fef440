#include "cnls/cli/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "cnls/cli/config.hpp"
#include "cnls/errors.hpp"

namespace cnls::cli {

namespace {

std::string g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string g6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// JSON has no inf/nan; those become null.
nlohmann::json num(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

nlohmann::json vec(const Eigen::VectorXd& v) {
  auto out = nlohmann::json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) out.push_back(num(v[k]));
  return out;
}

nlohmann::json pairs(const std::vector<IndexPair>& ps) {
  auto out = nlohmann::json::array();
  for (auto [i, j] : ps) out.push_back({i + 1, j + 1});
  return out;
}

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};

struct Frame {
  double x0, x1, y0, y1;
  static constexpr double W = 640, H = 400, L = 60, R = 20, T = 20, B = 40;
  double px(double x) const { return L + (x - x0) / (x1 - x0) * (W - L - R); }
  double py(double y) const { return H - B - (y - y0) / (y1 - y0) * (H - T - B); }
};

std::string svg_open(const Frame& f, const std::string& xlabel, const std::string& ylabel) {
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << Frame::W << "\" height=\"" << Frame::H
    << "\" data-format-version=\"" << kFormatVersion << "\">\n";
  s << "<rect x=\"0\" y=\"0\" width=\"" << Frame::W << "\" height=\"" << Frame::H << "\" fill=\"white\"/>\n";
  s << "<rect x=\"" << Frame::L << "\" y=\"" << Frame::T << "\" width=\"" << Frame::W - Frame::L - Frame::R
    << "\" height=\"" << Frame::H - Frame::T - Frame::B << "\" fill=\"none\" stroke=\"black\"/>\n";
  s << "<text x=\"" << Frame::W / 2 << "\" y=\"" << Frame::H - 8 << "\" text-anchor=\"middle\">" << xlabel
    << " [" << g6(f.x0) << ", " << g6(f.x1) << "]</text>\n";
  s << "<text x=\"14\" y=\"" << Frame::H / 2 << "\" transform=\"rotate(-90 14 " << Frame::H / 2
    << ")\" text-anchor=\"middle\">" << ylabel << " [" << g6(f.y0) << ", " << g6(f.y1) << "]</text>\n";
  return s.str();
}

std::string polyline(const Frame& f, const std::vector<double>& xs, const std::vector<double>& ys, int series,
                     const std::string& label) {
  std::ostringstream s;
  s << "<polyline fill=\"none\" stroke=\"" << kPalette[series % 8] << "\" data-label=\"" << label << "\" points=\"";
  for (std::size_t k = 0; k < xs.size(); ++k) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s%.2f,%.2f", k ? " " : "", f.px(xs[k]), f.py(ys[k]));
    s << buf;
  }
  s << "\"/>\n";
  return s.str();
}

}  // namespace

std::string fields_csv(const Grid& g, const State& u) {
  std::ostringstream s;
  s << "# format_version=" << kFormatVersion << "\n";
  s << "x";
  for (int i = 0; i < u.d(); ++i) s << ",u" << i + 1;
  s << "\n";
  for (int k = 0; k < g.n_interior(); ++k) {
    s << g17(g.nodes()[k]);
    for (int i = 0; i < u.d(); ++i) s << "," << g17(u[i][k]);
    s << "\n";
  }
  return s.str();
}

void write_fields_csv(const std::string& path, const Grid& g, const State& u) { write_text(path, fields_csv(g, u)); }

LoadedFields parse_fields_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "# format_version=" + std::to_string(kFormatVersion)) {
    throw Error("fields csv: missing or unsupported format_version header");
  }
  if (!std::getline(in, line) || line.rfind("x,", 0) != 0) throw Error("fields csv: missing column header");
  const int d = static_cast<int>(std::count(line.begin(), line.end(), ','));
  std::vector<std::vector<double>> cols(d + 1);
  int row = 2;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::istringstream cells(line);
    std::string cell;
    int c = 0;
    while (std::getline(cells, cell, ',')) {
      if (c > d) throw Error("fields csv: too many columns on line " + std::to_string(row));
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str() || *end != '\0') throw Error("fields csv: bad number on line " + std::to_string(row));
      cols[c++].push_back(v);
    }
    if (c != d + 1) throw Error("fields csv: too few columns on line " + std::to_string(row));
  }
  LoadedFields out;
  out.nodes = Eigen::Map<const Field>(cols[0].data(), static_cast<Eigen::Index>(cols[0].size()));
  for (int i = 1; i <= d; ++i) {
    out.state.components.push_back(Eigen::Map<const Field>(cols[i].data(), static_cast<Eigen::Index>(cols[i].size())));
  }
  return out;
}

LoadedFields read_fields_csv(const std::string& path) { return parse_fields_csv(read_text(path)); }

std::string sweep_csv(const SweepTable& table) {
  std::ostringstream s;
  s << "# format_version=" << kFormatVersion << "\n";
  s << "b,energy";
  if (!table.empty()) {
    for (auto [i, j] : table.front().record.pairs) s << ",overlap_" << i + 1 << "_" << j + 1;
  }
  s << ",competitive_mass,limit_energy,max_limit_residual,min_component_l4\n";
  for (const auto& row : table) {
    const auto& r = row.record;
    s << g17(r.b) << "," << g17(r.energy);
    for (double o : r.overlaps) s << "," << g17(o);
    s << "," << g17(r.competitive_mass) << "," << g17(r.limit_energy) << "," << g17(r.max_relative_limit_residual)
      << "," << g17(r.min_component_l4) << "\n";
  }
  return s.str();
}

std::string solve_report_json(const ProblemSpec& spec, const SolverResult& r, const BoundsReport& b,
                              const HypothesisReport& h) {
  nlohmann::ordered_json j;
  j["format_version"] = kFormatVersion;
  j["problem"] = {{"components", spec.d()},
                  {"groups", spec.m()},
                  {"decomposition", spec.decomposition.boundaries()},
                  {"nodes", spec.grid.n_interior()}};
  j["solver"] = {{"converged", r.converged},
                 {"stop_reason", r.stop_reason},
                 {"seed", r.seed},
                 {"iterations", r.iterations},
                 {"energy", num(r.energy)},
                 {"tangent_grad_norm", num(r.tangent_grad_norm)},
                 {"free_grad_norm", num(r.free_grad_norm)},
                 {"nehari_residual", num(r.nehari_residual)},
                 {"in_E", r.in_E},
                 {"margins", vec(r.margins)},
                 {"multiplier_norm", num(r.multiplier_norm)},
                 {"component_l4", r.component_l4}};
  j["bounds"] = {{"valid", b.valid},
                 {"total_h1", num(b.total_h1)},
                 {"total_gradient", num(b.total_gradient)},
                 {"group_l4", vec(b.group_l4)},
                 {"competitive_mass", num(b.competitive_mass)},
                 {"cooperative_mass", num(b.cooperative_mass)},
                 {"energy_identity_gap", num(b.energy_identity_gap)},
                 {"sobolev_constant", num(b.sobolev_constant)},
                 {"sobolev_gap", vec(b.sobolev_gap)},
                 {"mass_inequality_holds", b.mass_inequality_holds},
                 {"sobolev_inequality_holds", b.sobolev_inequality_holds}};
  j["hypotheses"] = {{"h0_ok", h.h0_ok},
                     {"h1_ok", h.h1_ok},
                     {"potentials_nonnegative", h.potentials_nonnegative},
                     {"max_pos_part_K2", num(h.max_pos_part_K2)},
                     {"min_competition_K2", num(h.min_competition_K2)},
                     {"pure_competition_K2", h.pure_competition_K2},
                     {"h1_violations", pairs(h.h1_violations)},
                     {"nonexistence_pairs", pairs(h.nonexistence_pairs)}};
  return j.dump(2) + "\n";
}

std::string sweep_report_json(const SweepTable& table, int fallbacks) {
  nlohmann::ordered_json j;
  j["format_version"] = kFormatVersion;
  j["fresh_fallbacks"] = fallbacks;
  auto rows = nlohmann::json::array();
  for (const auto& row : table) {
    const auto& r = row.record;
    rows.push_back({{"b", num(r.b)},
                    {"energy", num(r.energy)},
                    {"baseline_energy", num(row.baseline_energy)},
                    {"warm", row.warm},
                    {"pairs", pairs(r.pairs)},
                    {"overlaps", r.overlaps},
                    {"competitive_mass", num(r.competitive_mass)},
                    {"limit_energy", num(r.limit_energy)},
                    {"limit_residuals", vec(r.limit_residuals)},
                    {"max_limit_residual", num(r.max_relative_limit_residual)},
                    {"min_component_l4", num(r.min_component_l4)}});
  }
  j["rows"] = rows;
  return j.dump(2) + "\n";
}

std::string components_svg(const Grid& g, const State& u) {
  const int n = g.n_interior();
  double lo = 0.0, hi = 0.0;
  for (int i = 0; i < u.d(); ++i) {
    lo = std::min(lo, u[i].minCoeff());
    hi = std::max(hi, u[i].maxCoeff());
  }
  if (hi <= lo) hi = lo + 1.0;
  const Frame f{0.0, g.size(), lo, hi};
  std::string s = svg_open(f, g.kind() == GridKind::Interval ? "x" : "r", "u");
  std::vector<double> xs(n + 2), ys(n + 2);
  xs[0] = 0.0;
  xs[n + 1] = g.size();
  for (int k = 0; k < n; ++k) xs[k + 1] = g.nodes()[k];
  for (int i = 0; i < u.d(); ++i) {
    // Dirichlet value at the outer end; the radial centre repeats the first node.
    ys[0] = g.kind() == GridKind::Interval ? 0.0 : u[i][0];
    ys[n + 1] = 0.0;
    for (int k = 0; k < n; ++k) ys[k + 1] = u[i][k];
    s += polyline(f, xs, ys, i, "u" + std::to_string(i + 1));
  }
  return s + "</svg>\n";
}

std::string overlap_svg(const SweepTable& table) {
  std::vector<std::vector<double>> xs, ys;
  std::vector<std::string> labels;
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  if (!table.empty()) {
    const auto& ps = table.front().record.pairs;
    xs.resize(ps.size());
    ys.resize(ps.size());
    for (auto [i, j] : ps) labels.push_back("overlap_" + std::to_string(i + 1) + "_" + std::to_string(j + 1));
    for (const auto& row : table) {
      const double b = std::abs(row.record.b);
      for (std::size_t p = 0; p < ps.size(); ++p) {
        const double o = row.record.overlaps[p];
        if (!(b > 0.0) || !(o > 0.0)) continue;
        xs[p].push_back(std::log10(b));
        ys[p].push_back(std::log10(o));
        x0 = std::min(x0, xs[p].back());
        x1 = std::max(x1, xs[p].back());
        y0 = std::min(y0, ys[p].back());
        y1 = std::max(y1, ys[p].back());
      }
    }
  }
  if (!(x1 > x0)) {
    x0 = std::isfinite(x0) ? x0 - 0.5 : 0.0;
    x1 = x0 + 1.0;
  }
  if (!(y1 > y0)) {
    y0 = std::isfinite(y0) ? y0 - 0.5 : 0.0;
    y1 = y0 + 1.0;
  }
  const Frame f{x0, x1, y0, y1};
  std::string s = svg_open(f, "log10 |b|", "log10 overlap");
  for (std::size_t p = 0; p < xs.size(); ++p) s += polyline(f, xs[p], ys[p], static_cast<int>(p), labels[p]);
  return s + "</svg>\n";
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << text;
  if (!out) throw Error("write failed for '" + path + "'");
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace cnls::cli
