// SPDX-License-Identifier: Apache-2.0
//
// chanforge - multi-frequency double-directional channel model toolkit
// Copyright (C) 2026 chanforge contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include <cstdio>

namespace chanforge::cli {

inline int dispatch(int argc, char** argv) {
    (void)argc;
    (void)argv;
    std::fprintf(stderr, "chanforge: not yet wired\n");
    return 2;
}

}  // namespace chanforge::cli
