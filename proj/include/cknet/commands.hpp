/*
 Copyright 2026 The CKNet Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#ifndef CKNET_COMMANDS_HPP
#define CKNET_COMMANDS_HPP

#include <iosfwd>

namespace cknet {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Entry point of the `cknet` tool: gen, train, eval, spectrum, predict, edmd.
/// Returns 0 on success, 1 on runtime failure and 2 on usage or config errors.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run_cli(int argc, const char* const* argv);

}  // namespace cknet

#endif  // CKNET_COMMANDS_HPP
