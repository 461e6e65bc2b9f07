#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fts {

enum class Errc {
  BehindCamera,
  MissingJoints,
  EmptyMask,
  TooSmall,
  ShapeMismatch,
  AllCandidatesFailed,
  NoInliers,
  EmptySamples,
  NoData,
  MissingGroup,
  MissingShape,
  InvalidArgument,
  Io,
  Parse,
};

std::string_view errc_name(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

inline std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::BehindCamera: return "BehindCamera";
    case Errc::MissingJoints: return "MissingJoints";
    case Errc::EmptyMask: return "EmptyMask";
    case Errc::TooSmall: return "TooSmall";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::AllCandidatesFailed: return "AllCandidatesFailed";
    case Errc::NoInliers: return "NoInliers";
    case Errc::EmptySamples: return "EmptySamples";
    case Errc::NoData: return "NoData";
    case Errc::MissingGroup: return "MissingGroup";
    case Errc::MissingShape: return "MissingShape";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::Io: return "IoError";
    case Errc::Parse: return "ParseError";
  }
  return "Unknown";
}

}  // namespace fts
