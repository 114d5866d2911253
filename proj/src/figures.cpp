#include "ura/figures.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <sstream>

#include "ura/errors.hpp"
#include "ura/format.hpp"

namespace ura {

namespace {

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

template <class T>
T parse_cell(const std::string& cell, int line, const char* field) {
  T out{};
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), out);
  if (ec != std::errc() || ptr != cell.data() + cell.size())
    throw ParseError(line, field, "cannot parse '" + cell + "'");
  return out;
}

/// Rows after the expected header, each split into exactly `width` cells.
std::vector<std::vector<std::string>> read_table(std::istream& in, const std::string& header, std::size_t width) {
  std::string line;
  if (!std::getline(in, line) || line != header) throw ParseError(1, "header", "expected '" + header + "'");
  std::vector<std::vector<std::string>> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto cells = split_row(line);
    if (cells.size() != width) throw ParseError(line_no, "row", "expected " + std::to_string(width) + " cells");
    rows.push_back(std::move(cells));
  }
  return rows;
}

}  // namespace

std::string to_string(FigureKind kind) { return kind == FigureKind::fig1 ? "fig1" : "fig2"; }

std::string emit_figure_data(const ExperimentResults& results, FigureKind kind) {
  std::ostringstream out;
  if (kind == FigureKind::fig1) {
    const auto* conv = std::get_if<ConvergenceResult>(&results);
    if (conv == nullptr) throw UsageError("fig1 needs convergence results");
    out << "iteration,e_gamma,policy\n";
    for (const auto& trace : conv->traces)
      for (const auto& e : trace.trace)
        out << e.iteration << ',' << format_double(e.e_gamma) << ',' << to_string(trace.policy) << '\n';
    return out.str();
  }
  const auto* sweep = std::get_if<SweepTable>(&results);
  if (sweep == nullptr) throw UsageError("fig2 needs sweep results");
  std::vector<SweepRow> rows = sweep->rows;
  sort_sweep_rows(rows);
  out << "snr_db,m,channel_mode,p_e\n";
  for (const auto& r : rows)
    out << format_double(r.snr_db) << ',' << r.m << ',' << to_string(r.channel_mode) << ',' << format_double(r.p_e)
        << '\n';
  return out.str();
}

void thin_traces(ConvergenceResult& result, Index stride) {
  if (stride < 1) throw InvalidParameter("trace stride must be >= 1");
  if (stride == 1) return;
  for (auto& trace : result.traces) {
    std::vector<TraceEntry> kept;
    for (std::size_t k = 0; k < trace.trace.size(); ++k)
      if (trace.trace[k].iteration % stride == 0 || k + 1 == trace.trace.size()) kept.push_back(trace.trace[k]);
    trace.trace = std::move(kept);
  }
}

void sort_sweep_rows(std::vector<SweepRow>& rows) {
  std::stable_sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
    if (a.m != b.m) return a.m < b.m;
    const auto ma = to_string(a.channel_mode);
    const auto mb = to_string(b.channel_mode);
    if (ma != mb) return ma < mb;
    return a.snr_db < b.snr_db;
  });
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << "snr_db,m,channel_mode,p_md,p_fa,p_e,trials,overflows\n";
  for (const auto& r : rows)
    out << format_double(r.snr_db) << ',' << r.m << ',' << to_string(r.channel_mode) << ','
        << format_double(r.p_md) << ',' << format_double(r.p_fa) << ',' << format_double(r.p_e) << ','
        << r.trials << ',' << r.overflows << '\n';
  return out.str();
}

std::string convergence_csv(const ConvergenceResult& result) {
  std::ostringstream out;
  out << "policy,iteration,coordinate,step,reward,cost,e_gamma\n";
  for (const auto& trace : result.traces)
    for (const auto& e : trace.trace)
      out << to_string(trace.policy) << ',' << e.iteration << ',' << e.coordinate << ',' << format_double(e.step)
          << ',' << format_double(e.reward) << ',' << format_double(e.cost) << ',' << format_double(e.e_gamma)
          << '\n';
  return out.str();
}

std::string trials_csv(const std::vector<ErrorReport>& reports, const std::vector<std::uint64_t>& seeds) {
  if (reports.size() != seeds.size()) throw InvalidParameter("one seed per trial report expected");
  std::ostringstream out;
  out << "trial,seed,p_md,p_fa,p_e,decoded,overflows,detector_failures\n";
  for (std::size_t t = 0; t < reports.size(); ++t) {
    const auto& r = reports[t];
    out << t << ',' << seeds[t] << ',' << format_double(r.p_md) << ',' << format_double(r.p_fa) << ','
        << format_double(r.p_e) << ',' << r.decoded << ',' << r.overflows << ',' << r.detector_failures << '\n';
  }
  return out.str();
}

std::vector<Fig1Row> read_fig1_csv(std::istream& in) {
  std::vector<Fig1Row> out;
  int line = 1;
  for (const auto& cells : read_table(in, "iteration,e_gamma,policy", 3)) {
    ++line;
    out.push_back({parse_cell<Index>(cells[0], line, "iteration"), parse_cell<double>(cells[1], line, "e_gamma"),
                   cells[2]});
  }
  return out;
}

std::vector<Fig2Row> read_fig2_csv(std::istream& in) {
  std::vector<Fig2Row> out;
  int line = 1;
  for (const auto& cells : read_table(in, "snr_db,m,channel_mode,p_e", 4)) {
    ++line;
    out.push_back({parse_cell<double>(cells[0], line, "snr_db"), parse_cell<Index>(cells[1], line, "m"), cells[2],
                   parse_cell<double>(cells[3], line, "p_e")});
  }
  return out;
}

}  // namespace ura
