#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace sct::harness {

/// Command-line entry point. `args` excludes the program name. Returns the process exit status;
/// errors are reported on `err` with a non-zero status.
///
///   phantom     --out DIR --n N --seed S        write N phantom subjects and config.json
///   split       --run DIR                       write split.json
///   train       --run DIR                       checkpoints/, logs/train.jsonl, logs/sampling.jsonl
///   synthesize  --run DIR                       volumes/<id>_sct.vvol and <id>_sctmask.vvol for test subjects
///   evaluate    --run DIR [--name N]            reports/N.json and reports/N.txt
///   compare     --a A.json --b B.json --out P   P.json and P.txt with paired t-tests of A against B
///   gradcheck                                   finite-difference gradient suite
///
/// Every subcommand touching a run directory accepts --config FILE, named overrides and
/// repeated --set key=value (JSON value, dotted keys for nested objects); the resolved
/// configuration is written back to config.json.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sct::harness
