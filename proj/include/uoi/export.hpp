#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "uoi/harness.hpp"

namespace uoi {

enum class ExportFormat { csv, jsonl, plot };

std::optional<ExportFormat> parse_format(std::string_view name);

/// Write or read failure on an output path.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The twelve fixed CSV columns, in order.
inline constexpr std::string_view kCsvHeader =
    "scenario,policy,N,K,rho,V,W,avg_uoi,stderr_uoi,avg_freq,violation_prob,bound";

std::string to_csv(const Report& report);
std::string to_jsonl(const Report& report);

/// One (x, y, yerr) series per curve. The x axis depends on the scenario:
/// rho for single (one curve per policy and V), N for multi and control,
/// W for csma (one curve per N), rho for mdp, terminal index for waterfill.
struct PlotCurve {
  std::string name;
  std::vector<std::array<double, 3>> points;
};
std::vector<PlotCurve> to_plot(const Report& report);
std::string format_plot(const PlotCurve& curve);

/// Writes the report. With an empty path the output goes to stdout. Plot data
/// goes to one file per curve, `<stem>_<curve>.dat`, next to `path`.
/// Throws InvalidParameter on an empty report and IoError when a file cannot be written.
void export_report(const Report& report, ExportFormat format, const std::string& path);

}  // namespace uoi
