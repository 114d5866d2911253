#pragma once

#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "ura/system_sim.hpp"

namespace ura {

struct SweepTable {
  std::vector<SweepRow> rows;
};

using ExperimentResults = std::variant<ConvergenceResult, SweepTable>;

enum class FigureKind { fig1, fig2 };

std::string to_string(FigureKind kind);

/// fig1: iteration,e_gamma,policy for every trace entry of every policy.
/// fig2: snr_db,m,channel_mode,p_e sorted by (m, channel_mode, snr_db).
/// Throws UsageError when the results do not belong to the figure.
std::string emit_figure_data(const ExperimentResults& results, FigureKind kind);

/// Keeps entries whose iteration is a multiple of `stride`, plus the last one.
void thin_traces(ConvergenceResult& result, Index stride);

/// Orders rows by (m, channel_mode name, snr_db).
void sort_sweep_rows(std::vector<SweepRow>& rows);

std::string sweep_csv(const std::vector<SweepRow>& rows);
std::string convergence_csv(const ConvergenceResult& result);
std::string trials_csv(const std::vector<ErrorReport>& reports, const std::vector<std::uint64_t>& seeds);

struct Fig1Row {
  Index iteration = 0;
  double e_gamma = 0.0;
  std::string policy;
};

struct Fig2Row {
  double snr_db = 0.0;
  Index m = 0;
  std::string channel_mode;
  double p_e = 0.0;
};

/// Parse the CSV written by emit_figure_data. Throws ParseError.
std::vector<Fig1Row> read_fig1_csv(std::istream& in);
std::vector<Fig2Row> read_fig2_csv(std::istream& in);

}  // namespace ura
