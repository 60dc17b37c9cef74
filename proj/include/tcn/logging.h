// Copyright 2026 The TCN Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef TCN_LOGGING_H_
#define TCN_LOGGING_H_

namespace tcn {

// Routes spdlog to stderr at the level named by $TCN_LOG (trace, debug,
// info, warn, error, off); warn when unset. Unknown names fall back to warn.
void InitLogging();

}  // namespace tcn

#endif  // TCN_LOGGING_H_
