/* Copyright 2026 The SSSM Authors. All Rights Reserved.

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
#ifndef SSSM_CLI_H_
#define SSSM_CLI_H_

#include <ostream>

namespace sssm {

// Entry point of the sssm tool. Returns 0 on success, 2 on usage errors
// (unknown subcommand or flag) and 1 on runtime failures.
int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err);

}  // namespace sssm

#endif  // SSSM_CLI_H_
