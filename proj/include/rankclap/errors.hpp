#ifndef RANKCLAP_ERRORS_HPP_
#define RANKCLAP_ERRORS_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rankclap {

// Precondition violations on shapes, sizes and argument ranges.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// An embedding row whose norm is too small for cosine similarity.
class DegenerateEmbedding : public std::domain_error {
 public:
  DegenerateEmbedding(const std::string& what, std::size_t row)
      : std::domain_error(what), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

// A function evaluation produced NaN or Inf.
class EvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Dataset ingestion file does not match the version-1 contract.
// record() is the 0-based index of the offending record, or npos for
// header-level problems.
class FormatError : public std::runtime_error {
 public:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  explicit FormatError(const std::string& what, std::size_t record = npos)
      : std::runtime_error(what), record_(record) {}
  std::size_t record() const noexcept { return record_; }

 private:
  std::size_t record_;
};

class CheckpointFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Using an object whose state no longer matches its producer, e.g. a
// forward cache after the model parameters changed.
class InvalidState : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// A statistic with a zero denominator (all ties, zero variance).
class UndefinedStatistic : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace rankclap

#endif  // RANKCLAP_ERRORS_HPP_
