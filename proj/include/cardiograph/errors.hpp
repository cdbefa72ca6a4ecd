#pragma once

#include <stdexcept>
#include <string>

namespace cardiograph {

enum class errc {
  InvalidDims,
  Unsupported,
  NegativeSigma,
  LinearSolveDiverged,
  NoActivation,
  NotConverged,
  NonPositiveVelocity,
  EmptyMask,
  TooSmall,
  BadMagic,
  VersionMismatch,
  TruncatedFile,
  ChecksumMismatch,
  NotSPD,
  GeometryMismatch,
  ModeOverflow,
  ShapeMismatch,
  ZeroTarget,
  ZeroTruthRow,
  ConstantVector,
  EmptyList,
  NonFinite,
  ConfigError,
  IoError,
};

// Process exit codes: config errors 2, numerical failures 3, I/O failures 4.
enum class error_class { config = 2, numerical = 3, io = 4 };

constexpr error_class classify(errc c) {
  switch (c) {
    case errc::InvalidDims:
    case errc::Unsupported:
    case errc::NegativeSigma:
    case errc::EmptyMask:
    case errc::TooSmall:
    case errc::GeometryMismatch:
    case errc::ModeOverflow:
    case errc::ShapeMismatch:
    case errc::ZeroTarget:
    case errc::ZeroTruthRow:
    case errc::ConstantVector:
    case errc::EmptyList:
    case errc::ConfigError:
      return error_class::config;
    case errc::LinearSolveDiverged:
    case errc::NoActivation:
    case errc::NotConverged:
    case errc::NonPositiveVelocity:
    case errc::NotSPD:
    case errc::NonFinite:
      return error_class::numerical;
    case errc::BadMagic:
    case errc::VersionMismatch:
    case errc::TruncatedFile:
    case errc::ChecksumMismatch:
    case errc::IoError:
      return error_class::io;
  }
  return error_class::numerical;
}

constexpr const char* errc_name(errc c) {
  switch (c) {
    case errc::InvalidDims: return "InvalidDims";
    case errc::Unsupported: return "Unsupported";
    case errc::NegativeSigma: return "NegativeSigma";
    case errc::LinearSolveDiverged: return "LinearSolveDiverged";
    case errc::NoActivation: return "NoActivation";
    case errc::NotConverged: return "NotConverged";
    case errc::NonPositiveVelocity: return "NonPositiveVelocity";
    case errc::EmptyMask: return "EmptyMask";
    case errc::TooSmall: return "TooSmall";
    case errc::BadMagic: return "BadMagic";
    case errc::VersionMismatch: return "VersionMismatch";
    case errc::TruncatedFile: return "TruncatedFile";
    case errc::ChecksumMismatch: return "ChecksumMismatch";
    case errc::NotSPD: return "NotSPD";
    case errc::GeometryMismatch: return "GeometryMismatch";
    case errc::ModeOverflow: return "ModeOverflow";
    case errc::ShapeMismatch: return "ShapeMismatch";
    case errc::ZeroTarget: return "ZeroTarget";
    case errc::ZeroTruthRow: return "ZeroTruthRow";
    case errc::ConstantVector: return "ConstantVector";
    case errc::EmptyList: return "EmptyList";
    case errc::NonFinite: return "NonFinite";
    case errc::ConfigError: return "ConfigError";
    case errc::IoError: return "IoError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  errc code() const { return code_; }
  error_class cls() const { return classify(code_); }
  int exit_code() const { return static_cast<int>(cls()); }

 private:
  errc code_;
};

[[noreturn]] inline void raise(errc code, const std::string& what) { throw Error(code, what); }

}  // namespace cardiograph
