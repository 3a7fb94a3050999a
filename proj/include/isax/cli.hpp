// Copyright 2026 isax authors. Apache 2.0 License.
#pragma once

namespace isax::cli {

// Full command dispatcher. Exit codes: 0 success, 1 runtime failure,
// 2 configuration error.
int run(int argc, const char* const* argv);

}  // namespace isax::cli
