#include "uoi/export.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <json.hpp>

namespace uoi {

namespace {

std::string num(double x) {
  if (!std::isfinite(x)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

std::string sanitize(const std::string& s) {
  std::string out;
  for (char c : s) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_') ? c : '-';
  return out;
}

nlohmann::json finite_or_null(double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); }

void require_rows(const Report& report) {
  if (report.rows.empty()) throw InvalidParameter("export: report has no rows");
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("write to '" + path + "' failed");
}

}  // namespace

std::optional<ExportFormat> parse_format(std::string_view name) {
  if (name == "csv") return ExportFormat::csv;
  if (name == "jsonl" || name == "json-lines") return ExportFormat::jsonl;
  if (name == "plot" || name == "plot-data") return ExportFormat::plot;
  return std::nullopt;
}

std::string to_csv(const Report& report) {
  require_rows(report);
  std::ostringstream out;
  out << kCsvHeader << '\n';
  for (const auto& r : report.rows) {
    out << csv_field(r.scenario) << ',' << csv_field(r.policy) << ',' << r.n << ',' << r.k << ',' << num(r.rho) << ','
        << num(r.v) << ',' << (r.w > 0 ? std::to_string(r.w) : std::string()) << ',' << num(r.avg_uoi) << ','
        << num(r.stderr_uoi) << ',' << num(r.mean_freq()) << ',' << num(r.violation_prob) << ',' << num(r.bound)
        << '\n';
  }
  return out.str();
}

std::string to_jsonl(const Report& report) {
  require_rows(report);
  using nlohmann::json;
  std::ostringstream out;
  for (const auto& r : report.rows) {
    json j;
    j["type"] = "row";
    j["scenario"] = r.scenario;
    j["policy"] = r.policy;
    j["N"] = r.n;
    j["K"] = r.k;
    j["rho"] = finite_or_null(r.rho);
    j["V"] = finite_or_null(r.v);
    j["W"] = r.w > 0 ? json(r.w) : json(nullptr);
    j["avg_uoi"] = finite_or_null(r.avg_uoi);
    j["stderr_uoi"] = finite_or_null(r.stderr_uoi);
    j["avg_freq"] = finite_or_null(r.mean_freq());
    j["violation_prob"] = finite_or_null(r.violation_prob);
    j["bound"] = finite_or_null(r.bound);
    j["samples"] = r.samples;
    json freq = json::array();
    for (Index i = 0; i < r.avg_freq.size(); ++i) freq.push_back(r.avg_freq(i));
    j["freq"] = std::move(freq);
    json extras = json::object();
    for (const auto& [k, v] : r.extras) extras[k] = finite_or_null(v);
    j["extras"] = std::move(extras);
    out << j.dump() << '\n';
  }
  for (const auto& p : report.trace) {
    json j{{"type", "trace"}, {"t", p.t}, {"state", finite_or_null(p.state)}, {"q", p.q}, {"uoi", p.uoi}};
    out << j.dump() << '\n';
  }
  if (report.table) {
    const auto& tb = *report.table;
    json j;
    j["type"] = "policy_table";
    j["cost"] = tb.kind == CostKind::uoi ? "uoi" : "aoi";
    j["lambda"] = tb.lambda;
    j["weights"] = tb.weights;
    j["q_centers"] = tb.q_centers;
    json rows = json::array();
    for (Index r = 0; r < tb.decision.rows(); ++r) {
      json row = json::array();
      for (Index c = 0; c < tb.decision.cols(); ++c) row.push_back(tb.decision(r, c));
      rows.push_back(std::move(row));
    }
    j["update_probability"] = std::move(rows);
    out << j.dump() << '\n';
  }
  return out.str();
}

std::vector<PlotCurve> to_plot(const Report& report) {
  require_rows(report);
  std::map<std::string, PlotCurve> curves;
  std::vector<std::string> order;
  auto add = [&](const std::string& name, double x, double y, double yerr) {
    auto [it, fresh] = curves.try_emplace(name, PlotCurve{name, {}});
    if (fresh) order.push_back(name);
    it->second.points.push_back({x, y, yerr});
  };
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    const auto& r = report.rows[i];
    switch (report.scenario) {
      case Scenario::single: {
        std::string name = r.policy;
        if (std::isfinite(r.v)) name += "_V" + num(r.v);
        add(name, r.rho, r.avg_uoi, r.stderr_uoi);
        add(name + "_freq", r.rho, r.mean_freq(), 0.0);
        break;
      }
      case Scenario::multi:
      case Scenario::control: {
        std::string name = r.policy;
        if (r.w > 0) name += "_W" + std::to_string(r.w);
        add(name, static_cast<double>(r.n), r.avg_uoi, r.stderr_uoi);
        add(name + "_violation", static_cast<double>(r.n), r.violation_prob, 0.0);
        break;
      }
      case Scenario::csma:
        if (r.w > 0) {
          add("N" + std::to_string(r.n), r.w, r.avg_uoi, r.stderr_uoi);
          add("N" + std::to_string(r.n) + "_per_unit_variance", r.w, r.extra("uoi_per_unit_variance"), 0.0);
        } else {
          add(r.policy + "_N" + std::to_string(r.n), 0.0, r.avg_uoi, r.stderr_uoi);
        }
        break;
      case Scenario::mdp:
        add(r.policy, r.rho, r.avg_uoi, r.stderr_uoi);
        break;
      case Scenario::waterfill:
        add("pi", static_cast<double>(i), r.mean_freq(), 0.0);
        break;
    }
  }
  std::vector<PlotCurve> out;
  for (const auto& name : order) out.push_back(std::move(curves.at(name)));
  return out;
}

std::string format_plot(const PlotCurve& curve) {
  std::string out = "# x y yerr\n";
  for (const auto& p : curve.points) out += num(p[0]) + ' ' + num(p[1]) + ' ' + num(p[2]) + '\n';
  return out;
}

void export_report(const Report& report, ExportFormat format, const std::string& path) {
  require_rows(report);
  if (format != ExportFormat::plot) {
    const std::string text = format == ExportFormat::csv ? to_csv(report) : to_jsonl(report);
    if (path.empty()) std::cout << text;
    else write_file(path, text);
    return;
  }
  const auto curves = to_plot(report);
  if (path.empty()) {
    for (const auto& c : curves) std::cout << "# curve " << c.name << '\n' << format_plot(c) << "\n\n";
    return;
  }
  const std::filesystem::path base(path);
  const std::string stem = (base.parent_path() / base.stem()).string();
  for (const auto& c : curves) write_file(stem + "_" + sanitize(c.name) + ".dat", format_plot(c));
}

}  // namespace uoi
