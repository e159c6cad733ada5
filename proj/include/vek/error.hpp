#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vek {

enum class Errc {
  dimension,
  degenerate_data,
  non_finite,
  zero_variance,
  no_positives,
  single_class,
  non_finite_loss,
  empty_reference,
  invalid_argument,
  // dataio
  parse,
  schema,
  duplicate_id,
  unknown_instance,
  length_mismatch,
  io,
  // pu
  empty_validation,
  invalid_c,
  missing_weight,
  // ssa
  missing_class_seed,
  insufficient_class_samples,
  // xdiag
  missing_saliency,
  missing_class,
  too_few_instances,
  mask_unsupported,
  gradient_unsupported,
  // explain
  no_sentences,
  id_mismatch,
  // cli
  usage,
};

inline std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::dimension: return "DimensionError";
    case Errc::degenerate_data: return "DegenerateData";
    case Errc::non_finite: return "NonFiniteValue";
    case Errc::zero_variance: return "ZeroVariance";
    case Errc::no_positives: return "NoPositives";
    case Errc::single_class: return "SingleClass";
    case Errc::non_finite_loss: return "NonFiniteLoss";
    case Errc::empty_reference: return "EmptyReference";
    case Errc::invalid_argument: return "InvalidArgument";
    case Errc::parse: return "ParseError";
    case Errc::schema: return "SchemaError";
    case Errc::duplicate_id: return "DuplicateId";
    case Errc::unknown_instance: return "UnknownInstance";
    case Errc::length_mismatch: return "LengthMismatch";
    case Errc::io: return "IoError";
    case Errc::empty_validation: return "EmptyValidation";
    case Errc::invalid_c: return "InvalidC";
    case Errc::missing_weight: return "MissingWeight";
    case Errc::missing_class_seed: return "MissingClassSeed";
    case Errc::insufficient_class_samples: return "InsufficientClassSamples";
    case Errc::missing_saliency: return "MissingSaliency";
    case Errc::missing_class: return "MissingClass";
    case Errc::too_few_instances: return "TooFewInstances";
    case Errc::mask_unsupported: return "MaskUnsupported";
    case Errc::gradient_unsupported: return "GradientUnsupported";
    case Errc::no_sentences: return "NoSentences";
    case Errc::id_mismatch: return "IdMismatch";
    case Errc::usage: return "UsageError";
  }
  return "Error";
}

/// Single exception type for the library; `code()` identifies the failure.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& message) { throw Error(code, message); }

inline void require(bool condition, Errc code, const std::string& message) {
  if (!condition) fail(code, message);
}

}  // namespace vek
