#include "tractpipe/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

#include "tractpipe/parallel.hpp"

namespace tractpipe {

namespace {

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

double dice(const LabelVolume& pred, const LabelVolume& truth, int class_index) {
  require_same_shape(pred.dims(), pred.channels(), truth.dims(), truth.channels(), "dice");
  if (class_index < 0 || class_index >= pred.channels()) throw ShapeError("dice: class index out of range");
  const auto n = static_cast<std::size_t>(pred.channels());
  const auto p = pred.data();
  const auto t = truth.data();
  std::size_t both = 0, np = 0, nt = 0;
  for (std::size_t i = static_cast<std::size_t>(class_index); i < p.size(); i += n) {
    np += p[i];
    nt += t[i];
    both += static_cast<std::size_t>(p[i] & t[i]);
  }
  if (np + nt == 0) return 1.0;
  return 2.0 * static_cast<double>(both) / static_cast<double>(np + nt);
}

std::string class_name(int class_index) { return "tract_" + std::to_string(class_index); }

double sample_std(std::span<const double> values, double mean) {
  if (values.size() < 2) return 0.0;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

DiceReport summarize(std::string method_tag, std::vector<DiceRow> rows, int classes) {
  DiceReport report;
  report.method_tag = std::move(method_tag);
  std::vector<double> pooled;
  for (int k = 0; k < classes; ++k) {
    const auto name = class_name(k);
    std::vector<double> values;
    for (const auto& r : rows) {
      if (r.class_name == name) values.push_back(r.dice);
    }
    double mean = 0.0;
    for (double v : values) mean += v;
    if (!values.empty()) mean /= static_cast<double>(values.size());
    report.per_class.push_back(ClassDice{name, mean, sample_std(values, mean)});
  }
  for (const auto& r : rows) pooled.push_back(r.dice);
  double mean = 0.0;
  for (double v : pooled) mean += v;
  if (!pooled.empty()) mean /= static_cast<double>(pooled.size());
  report.overall_mean = mean;
  report.overall_std = sample_std(pooled, mean);
  report.rows = std::move(rows);
  return report;
}

DiceReport evaluate(const SliceClassifier& model, std::span<const PhantomSubject> test,
                    double threshold, const std::string& method_tag, int jobs) {
  if (test.empty()) throw ConfigError("evaluate: empty test set");
  const int classes = model.classes();
  std::vector<std::vector<DiceRow>> per_subject(test.size());
  parallel_for(test.size(), jobs, [&](std::size_t i) {
    const auto& subject = test[i];
    if (subject.truth.channels() != classes) {
      throw ShapeError("evaluate: subject " + subject.id + " has a different class count");
    }
    const auto pred = binarize(predict_subject(model, subject.peaks), threshold);
    for (int k = 0; k < classes; ++k) {
      per_subject[i].push_back(DiceRow{subject.id, class_name(k), dice(pred, subject.truth, k)});
    }
  });
  std::vector<DiceRow> rows;
  for (auto& r : per_subject) rows.insert(rows.end(), r.begin(), r.end());
  return summarize(method_tag, std::move(rows), classes);
}

void write_report_csv(const DiceReport& report, std::ostream& out) {
  out << "method,subject_id,class,dice\n";
  for (const auto& r : report.rows) {
    out << report.method_tag << ',' << r.subject_id << ',' << r.class_name << ',' << fixed6(r.dice)
        << '\n';
  }
  out << report.method_tag << ",ALL,ALL," << fixed6(report.overall_mean) << '\n';
}

void write_report_csv(const DiceReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  write_report_csv(report, out);
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace tractpipe
