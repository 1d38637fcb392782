#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace ddreach {

// Library-specific failures. Plain precondition violations use the standard
// exception types (std::invalid_argument, std::domain_error, std::out_of_range,
// std::overflow_error).

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A non-finite state appeared while integrating.
class IntegrationDiverged : public Error {
 public:
  IntegrationDiverged(std::size_t time_index, std::optional<std::size_t> sample_index = std::nullopt)
      : Error(make_message(time_index, sample_index)),
        time_index_(time_index),
        sample_index_(sample_index) {}

  [[nodiscard]] std::size_t time_index() const noexcept { return time_index_; }
  [[nodiscard]] std::optional<std::size_t> sample_index() const noexcept { return sample_index_; }

  [[nodiscard]] IntegrationDiverged with_sample(std::size_t sample) const {
    return IntegrationDiverged(time_index_, sample);
  }

 private:
  static std::string make_message(std::size_t t, std::optional<std::size_t> s) {
    std::string msg = "integration diverged: non-finite state at time index " + std::to_string(t);
    if (s) msg += " (sample " + std::to_string(*s) + ")";
    return msg;
  }

  std::size_t time_index_;
  std::optional<std::size_t> sample_index_;
};

class WeightsNotDrawn : public std::logic_error {
 public:
  WeightsNotDrawn() : std::logic_error("disturbance weights have not been drawn") {}
};

class RankDeficientData : public Error {
 public:
  using Error::Error;
};

class NotPositiveDefinite : public Error {
 public:
  using Error::Error;
};

class BoundsTooSmall : public Error {
 public:
  using Error::Error;
};

/// Fit failure on one slice of a reach tube.
class SliceFitError : public Error {
 public:
  SliceFitError(std::size_t time_index, const std::string& what)
      : Error("fit failed at time index " + std::to_string(time_index) + ": " + what),
        time_index_(time_index) {}

  [[nodiscard]] std::size_t time_index() const noexcept { return time_index_; }

 private:
  std::size_t time_index_;
};

/// Rejected run configuration; `field` names the offending entry.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error("config field '" + field + "': " + what), field_(std::move(field)) {}

  [[nodiscard]] const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace ddreach
