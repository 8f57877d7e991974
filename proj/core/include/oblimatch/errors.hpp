#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace oblimatch {

// Base class for every error thrown by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// --- geometry / scene -------------------------------------------------------

struct ZeroBaseline : Error {
  ZeroBaseline() : Error("translation norm below 1e-12, essential matrix undefined") {}
};

struct DegenerateEpiline : Error {
  DegenerateEpiline() : Error("both epipolar lines degenerate, distance undefined") {}
};

struct UndefinedTranslationError : Error {
  UndefinedTranslationError() : Error("translation norm below 1e-12, angular error undefined") {}
};

struct InfeasibleScene : Error {
  using Error::Error;
};

// --- descriptor field -------------------------------------------------------

struct OutOfBounds : Error {
  std::size_t index;
  explicit OutOfBounds(std::size_t i)
      : Error("keypoint " + std::to_string(i) + " outside grid bounds"), index(i) {}
};

struct ZeroVector : Error {
  std::size_t index;
  explicit ZeroVector(std::size_t i)
      : Error("descriptor at keypoint " + std::to_string(i) + " has near-zero norm"), index(i) {}
};

// --- file formats -----------------------------------------------------------

struct BadMagic : Error {
  using Error::Error;
};

struct DimensionMismatch : Error {
  using Error::Error;
};

struct TruncatedFile : Error {
  using Error::Error;
};

struct ShapeMismatch : Error {
  using Error::Error;
};

// --- matcher ----------------------------------------------------------------

struct MissingConfidence : Error {
  MissingConfidence() : Error("legacy confidence mode requires keypoint confidence values") {}
};

struct NonFiniteScore : Error {
  NonFiniteScore() : Error("score matrix contains non-finite entries") {}
};

// --- pose estimation --------------------------------------------------------

struct DegenerateConfiguration : Error {
  DegenerateConfiguration() : Error("correspondence design matrix has rank below 8") {}
};

struct InsufficientMatches : Error {
  explicit InsufficientMatches(std::size_t got)
      : Error("essential-matrix RANSAC needs at least 8 matches, got " + std::to_string(got)) {}
};

struct NoModelFound : Error {
  NoModelFound() : Error("no non-degenerate model found within the iteration budget") {}
};

struct CheiralityAmbiguous : Error {
  CheiralityAmbiguous() : Error("two pose candidates tie on positive-depth count") {}
};

struct ParallelRays : Error {
  ParallelRays() : Error("rays are parallel, triangulation undefined") {}
};

// --- evaluation -------------------------------------------------------------

struct EmptyInput : Error {
  EmptyInput() : Error("empty input") {}
};

struct ManifestError : Error {
  using Error::Error;
};

}  // namespace oblimatch
