/* Copyright 2026 The loratwin Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <string>
#include <vector>

namespace loratwin::cli {

// Runs the loratwin command line. Exit codes: 0 success, 1 runtime or
// validation failure, 2 usage error. Semantic output goes to stdout (or
// the --out file); progress and timing go to stderr.
int run(int argc, const char* const* argv);

// Test-friendly flavor: argv without the program name.
int run(const std::vector<std::string>& args);

}  // namespace loratwin::cli
