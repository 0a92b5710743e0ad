#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pprx {

enum class ErrorKind {
  EmptyDocument,
  InvalidMask,
  EmbeddingParse,
  SolverDidNotConverge,
  TrackerDidNotConverge,
  Shape,
  EmptyTrainingSet,
  Numerical,
  MissingClass,
  ModelFormat,
  UnknownWord,
  Corpus,
  LengthMismatch,
  InvalidArgument,
  Io,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::EmptyDocument: return "EmptyDocument";
    case ErrorKind::InvalidMask: return "InvalidMask";
    case ErrorKind::EmbeddingParse: return "EmbeddingParseError";
    case ErrorKind::SolverDidNotConverge: return "SolverDidNotConverge";
    case ErrorKind::TrackerDidNotConverge: return "TrackerDidNotConverge";
    case ErrorKind::Shape: return "ShapeError";
    case ErrorKind::EmptyTrainingSet: return "EmptyTrainingSet";
    case ErrorKind::Numerical: return "NumericalError";
    case ErrorKind::MissingClass: return "MissingClass";
    case ErrorKind::ModelFormat: return "ModelFormatError";
    case ErrorKind::UnknownWord: return "UnknownWord";
    case ErrorKind::Corpus: return "CorpusError";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::Io: return "IoError";
  }
  return "Error";
}

// Base of every error raised by the library. The kind drives CLI exit codes
// and HTTP status mapping.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class EmbeddingParseError : public Error {
 public:
  EmbeddingParseError(std::size_t line, const std::string& message)
      : Error(ErrorKind::EmbeddingParse, "line " + std::to_string(line) + ": " + message), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class SolverDidNotConverge : public Error {
 public:
  SolverDidNotConverge(std::size_t seed, double residual, int iterations)
      : Error(ErrorKind::SolverDidNotConverge,
              "seed " + std::to_string(seed) + " residual " + std::to_string(residual) + " after " +
                  std::to_string(iterations) + " iterations"),
        seed_(seed),
        residual_(residual) {}

  std::size_t seed() const noexcept { return seed_; }
  double residual() const noexcept { return residual_; }

 private:
  std::size_t seed_;
  double residual_;
};

class UnknownWordError : public Error {
 public:
  explicit UnknownWordError(std::vector<std::string> words)
      : Error(ErrorKind::UnknownWord, join(words)), words_(std::move(words)) {}

  const std::vector<std::string>& words() const noexcept { return words_; }

 private:
  static std::string join(const std::vector<std::string>& words) {
    std::string out = "not in document:";
    for (const auto& w : words) out += " " + w;
    return out;
  }

  std::vector<std::string> words_;
};

}  // namespace pprx
