#include "boardcal/log.hpp"

#include <cstdlib>
#include <iostream>
#include <mutex>

#include "boardcal/error.hpp"

namespace boardcal {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::Unknown: return "Unknown";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::EmptyCloud: return "EmptyCloud";
    case ErrorCode::DegenerateCluster: return "DegenerateCluster";
    case ErrorCode::ZeroMatrix: return "ZeroMatrix";
    case ErrorCode::ConstantVector: return "ConstantVector";
    case ErrorCode::BehindCamera: return "BehindCamera";
    case ErrorCode::OutOfFov: return "OutOfFov";
    case ErrorCode::DegenerateConfiguration: return "DegenerateConfiguration";
    case ErrorCode::DivergedRefinement: return "DivergedRefinement";
    case ErrorCode::TooFewInliers: return "TooFewInliers";
    case ErrorCode::NoDetections: return "NoDetections";
    case ErrorCode::AllZeroScores: return "AllZeroScores";
    case ErrorCode::Diverged: return "Diverged";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::IoFailure: return "IoFailure";
  }
  return "Unknown";
}

}  // namespace boardcal

namespace boardcal::log {

namespace {

Level parse_level_env() {
  const char* env = std::getenv("BOARDCAL_LOG");
  if (env == nullptr) return Level::Warn;
  std::string v(env);
  if (v == "debug") return Level::Debug;
  if (v == "info") return Level::Info;
  if (v == "warn") return Level::Warn;
  if (v == "error") return Level::Error;
  return Level::Warn;
}

const char* level_tag(Level lvl) {
  switch (lvl) {
    case Level::Debug: return "debug";
    case Level::Info: return "info";
    case Level::Warn: return "warn";
    case Level::Error: return "error";
  }
  return "?";
}

std::mutex g_mutex;

}  // namespace

Level level() {
  static const Level lvl = parse_level_env();
  return lvl;
}

void write(Level lvl, const std::string& message) {
  if (static_cast<int>(lvl) < static_cast<int>(level())) return;
  std::lock_guard<std::mutex> lock(g_mutex);
  std::cerr << "[boardcal " << level_tag(lvl) << "] " << message << "\n";
}

}  // namespace boardcal::log
