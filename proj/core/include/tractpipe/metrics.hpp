#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "tractpipe/phantom.hpp"
#include "tractpipe/segmentation.hpp"

namespace tractpipe {

// 2|P n T| / (|P| + |T|) for one class; 1.0 when both masks are empty.
double dice(const LabelVolume& pred, const LabelVolume& truth, int class_index);

struct ClassDice {
  std::string name;
  double mean = 0.0;
  double std = 0.0;
};

struct DiceRow {
  std::string subject_id;
  std::string class_name;
  double dice = 0.0;
};

struct DiceReport {
  std::string method_tag;
  std::vector<ClassDice> per_class;
  // Pooled over every (subject, class) pair.
  double overall_mean = 0.0;
  double overall_std = 0.0;
  std::vector<DiceRow> rows;
};

std::string class_name(int class_index);

// Sample standard deviation; 0 for fewer than two values.
double sample_std(std::span<const double> values, double mean);

// Aggregates rows into per-class and pooled statistics.
DiceReport summarize(std::string method_tag, std::vector<DiceRow> rows, int classes);

/// predict_subject -> binarize -> per-class Dice for every test subject.
/// Subjects are evaluated on up to `jobs` threads.
DiceReport evaluate(const SliceClassifier& model, std::span<const PhantomSubject> test,
                    double threshold, const std::string& method_tag, int jobs = 1);

// CSV: header `method,subject_id,class,dice`, one row per (subject, class),
// then a summary row `<method>,ALL,ALL,<overall mean>`. Six decimals.
void write_report_csv(const DiceReport& report, std::ostream& out);
void write_report_csv(const DiceReport& report, const std::filesystem::path& path);

}  // namespace tractpipe
