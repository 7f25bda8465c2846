#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include "evoplace/error.hpp"
#include "evoplace/harness.hpp"

namespace evoplace::harness {

namespace fs = std::filesystem;

double improvement_pct(double baseline, double hpwl) { return (baseline - hpwl) / baseline * 100.0; }

namespace {

struct Row {
  std::string id;
  std::string origin;
  std::string status;
  double hpwl = std::nan("");
  double runtime = std::nan("");
};

struct CurvePoint {
  int trial;
  double best;
  std::string id;
};

std::string num(double v) {
  if (!std::isfinite(v)) return "";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + p.string());
  out << text;
}

std::string polyline_svg(const std::string& title, const std::vector<std::pair<double, double>>& pts, bool scatter,
                         std::optional<double> hline) {
  const double W = 640, H = 400, pad = 50;
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (!pts.empty()) {
    x0 = x1 = pts[0].first;
    y0 = y1 = pts[0].second;
    for (auto [x, y] : pts) {
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
    }
  }
  if (hline) {
    y0 = std::min(y0, *hline);
    y1 = std::max(y1, *hline);
  }
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y1 = y0 + 1;
  auto sx = [&](double x) { return pad + (x - x0) / (x1 - x0) * (W - 2 * pad); };
  auto sy = [&](double y) { return H - pad - (y - y0) / (y1 - y0) * (H - 2 * pad); };
  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\" viewBox=\"0 0 640 400\">\n";
  s += "<rect width=\"640\" height=\"400\" fill=\"white\"/>\n";
  s += "<text x=\"320\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">" + title + "</text>\n";
  s += "<line x1=\"50\" y1=\"350\" x2=\"590\" y2=\"350\" stroke=\"black\"/>\n<line x1=\"50\" y1=\"50\" x2=\"50\" y2=\"350\" stroke=\"black\"/>\n";
  s += "<text x=\"50\" y=\"368\" font-family=\"sans-serif\" font-size=\"10\">" + num(x0) + "</text>\n";
  s += "<text x=\"590\" y=\"368\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" + num(x1) + "</text>\n";
  s += "<text x=\"46\" y=\"350\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" + num(y0) + "</text>\n";
  s += "<text x=\"46\" y=\"56\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" + num(y1) + "</text>\n";
  if (hline)
    s += "<line x1=\"50\" x2=\"590\" y1=\"" + num(sy(*hline)) + "\" y2=\"" + num(sy(*hline)) +
         "\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n";
  if (scatter) {
    for (auto [x, y] : pts) s += "<circle cx=\"" + num(sx(x)) + "\" cy=\"" + num(sy(y)) + "\" r=\"3\" fill=\"steelblue\"/>\n";
  } else if (!pts.empty()) {
    s += "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"";
    for (auto [x, y] : pts) s += num(sx(x)) + "," + num(sy(y)) + " ";
    s += "\"/>\n";
  }
  return s + "</svg>\n";
}

}  // namespace

std::vector<fs::path> write_report(const fs::path& run_dir, const std::string& format) {
  if (format != "csv" && format != "svg") throw Error(ErrorCode::InvalidArgument, "report format must be csv or svg");
  if (!fs::is_directory(run_dir)) throw Error(ErrorCode::MissingFile, "no run directory " + run_dir.string());
  store::RunStore st(run_dir);
  const auto run = st.read_json("run.json");
  std::optional<double> baseline;
  if (run && run->contains("baseline_hpwl") && (*run)["baseline_hpwl"].is_number()) baseline = (*run)["baseline_hpwl"].get<double>();

  std::map<std::string, double> runtime_of;
  for (const auto& t : st.read("timings.jsonl"))
    if (t.contains("id") && t.contains("runtime") && t["runtime"].is_number()) runtime_of[t["id"]] = t["runtime"];

  std::vector<Row> rows;
  if (baseline) rows.push_back({"baseline", "baseline", "Success", *baseline, run->at("baseline").value("runtime", std::nan(""))});
  std::map<std::string, std::size_t> index_of;
  for (const auto& r : st.read("candidates.jsonl")) {
    const std::string kind = r.value("record", "");
    if (kind == "evaluation") {
      Row row;
      row.id = r.at("id");
      row.origin = "generation";
      row.status = r.at("eval").at("status");
      if (r["eval"]["hpwl"].is_number()) row.hpwl = r["eval"]["hpwl"];
      if (runtime_of.count(row.id)) row.runtime = runtime_of[row.id];
      rows.push_back(row);
    }
  }
  std::vector<CurvePoint> curve;
  const auto history = st.read("history.jsonl");
  std::vector<double> trial_runtime;
  for (const auto& t : st.read("timings.jsonl"))
    if (t.contains("trial") && t.contains("eval_runtime") && !t["eval_runtime"].empty()) trial_runtime.push_back(t["eval_runtime"][0]);
  for (std::size_t i = 0; i < history.size(); ++i) {
    const json& h = history[i];
    if (!h.contains("trial") || !h.contains("chains") || !h.contains("best_hpwl"))
      throw Error(ErrorCode::CorruptStore, "history.jsonl: malformed record " + std::to_string(i + 1));
    curve.push_back({h["trial"].get<int>(), h["best_hpwl"].get<double>(), h.value("best_id", "")});
    for (const json& c : h["chains"]) {
      Row row;
      row.id = c.value("child", "");
      row.origin = "trial " + std::to_string(h["trial"].get<int>());
      row.status = c.at("child_eval").at("status");
      if (c["child_eval"]["hpwl"].is_number()) row.hpwl = c["child_eval"]["hpwl"];
      if (i < trial_runtime.size()) row.runtime = trial_runtime[i];
      rows.push_back(row);
    }
  }
  std::vector<std::pair<double, double>> dse_curve;
  for (const auto& d : st.read("dse.jsonl")) {
    if (!d.contains("step") || !d.contains("best_y")) throw Error(ErrorCode::CorruptStore, "dse.jsonl: malformed record");
    dse_curve.emplace_back(d["step"].get<double>(), d["best_y"].get<double>());
  }

  std::vector<fs::path> files;
  if (format == "csv") {
    std::string c = "id,origin,status,hpwl,runtime,improvement_pct\n";
    for (const Row& r : rows) {
      const std::string imp = baseline && std::isfinite(r.hpwl) ? num(improvement_pct(*baseline, r.hpwl)) : "";
      c += csv_field(r.id) + "," + csv_field(r.origin) + "," + r.status + "," + num(r.hpwl) + "," + num(r.runtime) + "," + imp + "\n";
    }
    files.push_back(run_dir / "candidates.csv");
    write_text(files.back(), c);
    if (!curve.empty()) {
      std::string b = "trial,best_hpwl,best_id,improvement_pct\n";
      for (const auto& p : curve)
        b += std::to_string(p.trial) + "," + num(p.best) + "," + p.id + "," + (baseline ? num(improvement_pct(*baseline, p.best)) : "") + "\n";
      files.push_back(run_dir / "best_so_far.csv");
      write_text(files.back(), b);
    }
    if (!dse_curve.empty()) {
      std::string b = "step,best_y\n";
      for (auto [s, y] : dse_curve) b += num(s) + "," + num(y) + "\n";
      files.push_back(run_dir / "dse_best.csv");
      write_text(files.back(), b);
    }
  } else {
    std::vector<std::pair<double, double>> scatter;
    for (std::size_t i = 0; i < rows.size(); ++i)
      if (std::isfinite(rows[i].hpwl)) scatter.emplace_back(static_cast<double>(i), rows[i].hpwl);
    files.push_back(run_dir / "candidates.svg");
    write_text(files.back(), polyline_svg("Candidate HPWL (dashed: baseline)", scatter, true, baseline));
    if (!curve.empty()) {
      std::vector<std::pair<double, double>> pts;
      for (const auto& p : curve) pts.emplace_back(p.trial, p.best);
      files.push_back(run_dir / "best_so_far.svg");
      write_text(files.back(), polyline_svg("Best-so-far HPWL by trial", pts, false, baseline));
    }
    if (!dse_curve.empty()) {
      files.push_back(run_dir / "dse_best.svg");
      write_text(files.back(), polyline_svg("DSE best loss by evaluation", dse_curve, false, std::nullopt));
    }
  }
  return files;
}

}  // namespace evoplace::harness
