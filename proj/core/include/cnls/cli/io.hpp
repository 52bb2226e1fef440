#pragma once

#include <string>
#include <vector>

#include "cnls/analysis.hpp"
#include "cnls/nehari.hpp"
#include "cnls/problem.hpp"
#include "cnls/solver.hpp"

namespace cnls::cli {

/// Fields as "x,u1,...,ud" rows after a "# format_version=1" line; %.17g so a reload is
/// bitwise exact.
std::string fields_csv(const Grid& g, const State& u);
void write_fields_csv(const std::string& path, const Grid& g, const State& u);

struct LoadedFields {
  Field nodes;
  State state;
};

/// Throws Error on a malformed file or a version mismatch.
LoadedFields parse_fields_csv(const std::string& text);
LoadedFields read_fields_csv(const std::string& path);

/// Table rows in ascending |b|.
struct SweepRow {
  SegregationRecord record;
  bool warm = true;  // false when the fresh baseline replaced the warm-started solve
  double baseline_energy = 0.0;
};
using SweepTable = std::vector<SweepRow>;

/// Columns: b, energy, overlap_i_j per K_2 pair, competitive_mass, limit_energy,
/// max_limit_residual, min_component_l4.
std::string sweep_csv(const SweepTable& table);

std::string solve_report_json(const ProblemSpec& spec, const SolverResult& result, const BoundsReport& bounds,
                              const HypothesisReport& hypotheses);
std::string sweep_report_json(const SweepTable& table, int fallbacks);

/// Polyline per component against the node coordinate.
std::string components_svg(const Grid& g, const State& u);
/// Log-log polyline per K_2 pair of the overlap against |b|; nonpositive overlaps are dropped.
std::string overlap_svg(const SweepTable& table);

void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

}  // namespace cnls::cli
