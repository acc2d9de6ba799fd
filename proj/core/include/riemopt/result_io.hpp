#pragma once

#include <stdexcept>
#include <string>

#include "riemopt/solver.hpp"

namespace riemopt {

class ResultFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A solver result together with the labels needed to reproduce it.
struct ResultDocument {
  std::string problem;
  std::string manifold;
  OptimResult result;
};

enum class ResultFormat { kJson, kCsv };

/// Keys of the result record, in output order.
const std::vector<std::string>& result_field_names();

std::string to_json(const ResultDocument& doc);
ResultDocument parse_json(const std::string& text);

/// Three sections: `key,value` scalars, `index,xopt`, and the aligned
/// `iter,funSeries,gradSeries,timeSeries` columns. Reals use %.17g.
std::string to_csv(const ResultDocument& doc);
ResultDocument parse_csv(const std::string& text);

std::string format_result(const ResultDocument& doc, ResultFormat format);
ResultDocument parse_result(const std::string& text, ResultFormat format);

}  // namespace riemopt
