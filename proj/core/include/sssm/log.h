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
#ifndef SSSM_LOG_H_
#define SSSM_LOG_H_

#include <string>

namespace sssm {

enum class LogLevel { kError, kInfo, kDebug };

// Reads SSSM_LOG_LEVEL (error|info|debug, default info).
LogLevel log_level_from_env();
void set_log_level(LogLevel level);

void log_error(const std::string& msg);
void log_info(const std::string& msg);
void log_debug(const std::string& msg);

}  // namespace sssm

#endif  // SSSM_LOG_H_
