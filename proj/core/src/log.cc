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
#include "sssm/log.h"

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <string_view>

namespace sssm {
namespace {

std::shared_ptr<spdlog::logger> logger() {
  static std::shared_ptr<spdlog::logger> l = [] {
    auto lg = spdlog::stderr_color_mt("sssm");
    lg->set_pattern("[%H:%M:%S.%e] [%^%l%$] %v");
    lg->set_level(spdlog::level::info);
    return lg;
  }();
  return l;
}

}  // namespace

LogLevel log_level_from_env() {
  const char* v = std::getenv("SSSM_LOG_LEVEL");
  if (!v) return LogLevel::kInfo;
  const std::string_view s(v);
  if (s == "error") return LogLevel::kError;
  if (s == "debug") return LogLevel::kDebug;
  return LogLevel::kInfo;
}

void set_log_level(LogLevel level) {
  switch (level) {
    case LogLevel::kError: logger()->set_level(spdlog::level::err); break;
    case LogLevel::kInfo: logger()->set_level(spdlog::level::info); break;
    case LogLevel::kDebug: logger()->set_level(spdlog::level::debug); break;
  }
}

void log_error(const std::string& msg) { logger()->error(msg); }
void log_info(const std::string& msg) { logger()->info(msg); }
void log_debug(const std::string& msg) { logger()->debug(msg); }

}  // namespace sssm
