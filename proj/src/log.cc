/*
 * Copyright 2026 The tabsel Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "tabsel/log.h"

#include <iostream>
#include <utility>

namespace tabsel {

namespace {

WarningHandler& Handler() {
  static WarningHandler handler = [](const std::string& m) {
    std::cerr << "warning: " << m << "\n";
  };
  return handler;
}

}  // namespace

WarningHandler SetWarningHandler(WarningHandler handler) {
  return std::exchange(Handler(), std::move(handler));
}

void Warn(const std::string& message) {
  if (Handler()) Handler()(message);
}

}  // namespace tabsel
