#pragma once

#include <array>
#include <string>
#include <vector>

#include <json.hpp>

namespace wgs::cli {

/// One refinement level of a convergence study as it appears in the reports.
struct ReportRow {
    int level = 0;
    int n = 0; // subdivisions per side, 0 for a mesh read from file
    double h = 0.0;
    long ndofs = 0;
    std::array<double, 3> errors{}; // L2, energy, pressure
    bool has_rates = false;
    std::array<double, 3> rates{};
    double residual = 0.0;
    double seconds = 0.0;
};

/// log(e1 / e2) / log(h1 / h2).
double observed_order(double e1, double e2, double h1, double h2);

/// Fills the rates of every row after the first from its predecessor.
void fill_rates(std::vector<ReportRow>& rows);

/// Errors in "%.2e" (three significant digits), rates in "%.1f", "-" when a
/// row has no predecessor.
std::string format_error(double e);
std::string format_rate(const ReportRow& row, int which);

extern const char* const kCsvHeader;

std::string to_csv(const std::vector<ReportRow>& rows);
std::string to_markdown(const std::vector<ReportRow>& rows, const std::string& title);

/// Inverse of to_csv for the columns it writes; rates are "-" or a number.
std::vector<ReportRow> parse_csv(const std::string& text);

nlohmann::json rows_to_json(const std::vector<ReportRow>& rows);

} // namespace wgs::cli
