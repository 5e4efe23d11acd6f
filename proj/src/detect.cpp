#include "tsuq/detect.hpp"

#include <cmath>
#include <fstream>

#include "tsuq/errors.hpp"

namespace tsuq {

AlertDecision detect(double observed, const Interval& interval) {
  if (!std::isfinite(observed)) throw DataError("non-finite observation");
  AlertDecision d;
  d.observed = observed;
  d.lower = interval.lower;
  d.upper = interval.upper;
  d.is_alert = observed < interval.lower || observed > interval.upper;
  return d;
}

Evaluation evaluate(const DetectionCounts& counts) {
  Evaluation e;
  e.counts = counts;
  if (counts.tp + counts.fp > 0) e.precision = double(counts.tp) / double(counts.tp + counts.fp);
  if (counts.tp + counts.fn > 0) e.recall = double(counts.tp) / double(counts.tp + counts.fn);
  return e;
}

Evaluation evaluate(const std::vector<AlertDecision>& decisions, const std::vector<bool>& labels) {
  if (decisions.size() != labels.size())
    throw ShapeError("evaluation: " + std::to_string(decisions.size()) + " decisions but " +
                     std::to_string(labels.size()) + " labels");
  DetectionCounts c;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool alert = decisions[i].is_alert;
    if (alert && labels[i]) ++c.tp;
    else if (alert) ++c.fp;
    else if (labels[i]) ++c.fn;
    else ++c.tn;
  }
  return evaluate(c);
}

std::vector<AlertDecision> run_detection(const std::vector<StreamPoint>& stream, const ForecastModel& model,
                                         const DetectionOptions& options) {
  std::vector<AlertDecision> out;
  out.reserve(stream.size());
  for (const auto& point : stream) {
    const auto result = infer(point.window.inputs, point.window.external, model.encoder, model.network,
                              options.dropout, model.noise, options.alpha);
    const auto original = to_original_scale(result, point.window.offset, options.mode);
    AlertDecision d = detect(point.observed, {original.lower, original.upper});
    d.series_id = point.window.series_id;
    d.date = point.window.first_target_date();
    out.push_back(std::move(d));
  }
  return out;
}

void write_alerts_csv(const std::filesystem::path& path, const std::vector<AlertDecision>& decisions) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "series_id,timestamp,observed,lower,upper,is_alert\n";
  char buf[128];
  for (const auto& d : decisions) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%d", d.observed, d.lower, d.upper, d.is_alert ? 1 : 0);
    out << d.series_id << ',' << format_iso_date(d.date) << ',' << buf << '\n';
  }
}

void write_evaluation_csv(const std::filesystem::path& path, const Evaluation& e) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "tp,fp,fn,precision,recall\n";
  auto fmt = [](const std::optional<double>& v) {
    if (!v) return std::string("undefined");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", *v);
    return std::string(buf);
  };
  out << e.counts.tp << ',' << e.counts.fp << ',' << e.counts.fn << ',' << fmt(e.precision) << ','
      << fmt(e.recall) << '\n';
}

}  // namespace tsuq

namespace tsuq {

std::vector<LabeledPoint> read_labels_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open labels file " + path.string());
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line) || line.rfind("series_id,date", 0) != 0)
    throw ParseError("expected header 'series_id,date' in " + path.string(), 1);
  std::vector<LabeledPoint> out;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ParseError("expected 'series_id,date'", line_no);
    try {
      out.push_back({line.substr(0, comma), parse_iso_date(line.substr(comma + 1))});
    } catch (const DataError& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return out;
}

void write_labels_csv(const std::filesystem::path& path, const std::vector<LabeledPoint>& labels) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "series_id,date\n";
  for (const auto& l : labels) out << l.series_id << ',' << format_iso_date(l.date) << '\n';
}

}  // namespace tsuq
