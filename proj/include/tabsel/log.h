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

#ifndef TABSEL_LOG_H_
#define TABSEL_LOG_H_

#include <functional>
#include <string>

namespace tabsel {

using WarningHandler = std::function<void(const std::string&)>;

// Routes library warnings. The default handler prints to stderr.
// Returns the previous handler.
WarningHandler SetWarningHandler(WarningHandler handler);

void Warn(const std::string& message);

}  // namespace tabsel

#endif  // TABSEL_LOG_H_
