#pragma once

namespace recast::cli {

// Exit statuses: 0 success, 1 runtime failure, 2 configuration or schema
// error. Per-record failures reported in run reports do not change the
// status.
inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitConfig = 2;

int main(int argc, char** argv);

}  // namespace recast::cli
