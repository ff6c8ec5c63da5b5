#include "report.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace wgs::cli {

namespace {

std::string printf_string(const char* fmt, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, fmt, v);
    return buf;
}

std::vector<std::string> split(const std::string& line, char sep)
{
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, sep)) out.push_back(field);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

} // namespace

const char* const kCsvHeader = "level,h,ndofs,err_l2,rate_l2,err_energy,rate_energy,err_pressure,rate_pressure";

double observed_order(double e1, double e2, double h1, double h2) { return std::log(e1 / e2) / std::log(h1 / h2); }

void fill_rates(std::vector<ReportRow>& rows)
{
    for (std::size_t i = 0; i < rows.size(); ++i) {
        rows[i].has_rates = i > 0;
        if (i == 0) continue;
        for (int j = 0; j < 3; ++j)
            rows[i].rates[j] = observed_order(rows[i - 1].errors[j], rows[i].errors[j], rows[i - 1].h, rows[i].h);
    }
}

std::string format_error(double e) { return printf_string("%.2e", e); }

std::string format_rate(const ReportRow& row, int which)
{
    if (!row.has_rates || !std::isfinite(row.rates[which])) return "-";
    return printf_string("%.1f", row.rates[which]);
}

std::string to_csv(const std::vector<ReportRow>& rows)
{
    std::ostringstream out;
    out << kCsvHeader << "\n";
    for (const auto& r : rows) {
        out << r.level << "," << printf_string("%.6e", r.h) << "," << r.ndofs;
        for (int j = 0; j < 3; ++j) out << "," << format_error(r.errors[j]) << "," << format_rate(r, j);
        out << "\n";
    }
    return out.str();
}

std::string to_markdown(const std::vector<ReportRow>& rows, const std::string& title)
{
    std::ostringstream out;
    if (!title.empty()) out << "### " << title << "\n\n";
    out << "| level | h | ndofs | ‖u − u_0‖ | rate | ‖∇_w(Q_h u − u_h)‖ | rate | ‖Q_0 p − p_h‖ | rate |\n";
    out << "|---|---|---|---|---|---|---|---|---|\n";
    for (const auto& r : rows) {
        out << "| " << r.level << " | " << printf_string("%.4e", r.h) << " | " << r.ndofs;
        for (int j = 0; j < 3; ++j) out << " | " << format_error(r.errors[j]) << " | " << format_rate(r, j);
        out << " |\n";
    }
    return out.str();
}

std::vector<ReportRow> parse_csv(const std::string& text)
{
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != kCsvHeader) throw std::invalid_argument("missing rate table header");
    std::vector<ReportRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = split(line, ',');
        if (f.size() != 9) throw std::invalid_argument("rate table row with " + std::to_string(f.size()) + " fields");
        ReportRow r;
        r.level = std::stoi(f[0]);
        r.h = std::stod(f[1]);
        r.ndofs = std::stol(f[2]);
        r.has_rates = f[4] != "-";
        for (int j = 0; j < 3; ++j) {
            r.errors[j] = std::stod(f[3 + 2 * j]);
            const auto& rate = f[4 + 2 * j];
            r.rates[j] = rate == "-" ? 0.0 : std::stod(rate);
        }
        rows.push_back(r);
    }
    return rows;
}

nlohmann::json rows_to_json(const std::vector<ReportRow>& rows)
{
    auto out = nlohmann::json::array();
    for (const auto& r : rows) {
        nlohmann::json j = {{"level", r.level},           {"n", r.n},
                            {"h", r.h},                   {"ndofs", r.ndofs},
                            {"err_l2", r.errors[0]},      {"err_energy", r.errors[1]},
                            {"err_pressure", r.errors[2]}, {"residual", r.residual},
                            {"seconds", r.seconds}};
        if (r.has_rates) {
            j["rate_l2"] = r.rates[0];
            j["rate_energy"] = r.rates[1];
            j["rate_pressure"] = r.rates[2];
        } else {
            j["rate_l2"] = nullptr;
            j["rate_energy"] = nullptr;
            j["rate_pressure"] = nullptr;
        }
        out.push_back(std::move(j));
    }
    return out;
}

} // namespace wgs::cli
