#pragma once

#include <carnot/config.hpp>

#include <atomic>
#include <iosfwd>
#include <string>
#include <vector>

namespace carnot
{

const char *carnot_version();
std::string sha256_hex(const std::string &data);

struct Verdict
{
  std::string name;
  bool pass = false;
  std::string detail;
};

struct RunOptions
{
  bool write_files = true;
  const std::atomic<bool> *stop = nullptr;  // checked between ladder levels
  std::ostream *log = nullptr;
};

struct RunResult
{
  std::vector<Verdict> verdicts;
  bool all_pass = false;
  std::string summary;              // JSON text, as written to summary.json
  std::vector<std::string> tables;  // file names inside the output directory
  double wall_seconds = 0.0;
};

// Writes summary.json plus CSV tables into config.output. Table rows are flushed as they are
// produced; on an error or interruption the summary is still written with status "error" or
// "interrupted" and the error is rethrown with the task and level attached.
RunResult run(const ExperimentConfig &config, const RunOptions &opt = {});

// Scope statement carried by every report.
extern const char *const kReportHeader;

}  // namespace carnot
